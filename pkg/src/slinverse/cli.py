"""Command line runner: synthesize spectra, add noise, reconstruct, verify.

Every file written embeds the effective configuration, so a run can be
repeated from its outputs alone.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import forward, functional as fn, optimizer as op, potentials, wronskian
from .forward import BoundaryTriple, InvalidBoundary, SolverError
from .grid import GridError, GridFunction, mean

log = logging.getLogger("slinverse")

SOLVER_INFO = {
    "integrator": "fixed-step RK4, scaled Pruefer angle",
    "phase_per_step": forward._PHASE_PER_STEP,
    "root_xtol": 1e-14,
}


def _bc(args) -> BoundaryTriple:
    return BoundaryTriple(args.alpha, args.beta, args.gamma)


def _weights(name: str) -> fn.WeightScheme:
    return fn.WeightScheme.inverse_square() if name == "invsq" else fn.UNIFORM


def _write_json(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def cmd_synth(args) -> int:
    bc = _bc(args)
    Q = potentials.resolve(args.potential, args.grid)
    prov = {
        "potential": args.potential,
        "grid": Q.n_intervals,
        "n_pairs": args.pairs,
        "solver": SOLVER_INFO,
    }
    targets = fn.synthesize(Q, bc, args.pairs, provenance=prov)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    targets.to_json(out)
    log.info("wrote %d eigenvalues to %s", len(targets), out)
    return 0


def perturb(targets: fn.TargetSpectra, r: float, seed: int) -> fn.TargetSpectra:
    """Add independent uniform noise on ``[-r, r]`` to every eigenvalue."""
    if not r >= 0.0:
        raise ValueError("noise radius must be nonnegative")
    if r == 0.0:
        return targets
    rng = np.random.default_rng(seed)
    noise = rng.uniform(-r, r, size=len(targets))
    entries = {k: v + u for (k, v), u in zip(targets.entries.items(), noise)}
    prov = dict(targets.provenance)
    prov["noise"] = {"model": "uniform", "r": r, "seed": seed}
    return fn.TargetSpectra(entries, targets.bc, prov)


def cmd_perturb(args) -> int:
    targets = fn.TargetSpectra.from_json(args.spectra)
    noisy = perturb(targets, args.noise_r, args.seed)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    noisy.to_json(out)
    return 0


def _load_targets(spec: str) -> fn.TargetSpectra:
    if spec == "stress":
        return potentials.stress_spectra()
    return fn.TargetSpectra.from_json(spec)


def _true_potential(args, targets) -> GridFunction | None:
    spec = args.true_potential or targets.provenance.get("potential")
    if spec is None:
        return None
    Q = potentials.resolve(spec, args.grid)
    # the L2 error needs a common grid
    return Q if Q.n_intervals == args.grid else None


def cmd_recover(args) -> int:
    targets = _load_targets(args.spectra)
    report = fn.validate_interlacing(targets)
    if not report.holds:
        log.warning("target spectra do not interlace at %s", [tuple(v) for v in report.violations])
    q0 = potentials.resolve(args.q0, args.grid)
    Q = _true_potential(args, targets)
    config = op.OptimizerConfig(
        max_iterations=args.max_iter,
        g_tolerance=args.gtol,
        mode=args.mode,
        restart_period=args.restart_period,
    )
    mean_Q = None
    if args.functional == "gtilde":
        if args.mean_q is None:
            raise ValueError("--functional gtilde needs --mean-q")
        mean_Q = args.mean_q
    weights = _weights(args.weights)

    def progress(rec):
        if rec.iteration % 10 == 0:
            log.info("iter %4d  G=%.4e  dlam=%.3e", rec.iteration, rec.g_value, rec.delta_lambda)

    try:
        result = op.minimize(q0, targets, weights, config, Q=Q, mean_Q=mean_Q, callback=progress)
        failure = None
    except SolverError as exc:
        result, failure = None, str(exc)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = {
        "config": {
            "spectra": args.spectra,
            "bc": targets.bc.to_dict(),
            "n_targets": len(targets),
            "weights": args.weights,
            "functional": args.functional,
            "mean_q": mean_Q,
            "q0": args.q0,
            "grid": args.grid,
            "true_potential": None if Q is None else (args.true_potential or targets.provenance.get("potential")),
            "optimizer": config.to_dict(),
            "targets_provenance": targets.provenance,
        },
        "interlacing": {"holds": report.holds, "pattern": report.pattern},
    }
    if result is None:
        summary.update({"converged": False, "termination": op.Termination.SOLVER_FAILURE.value, "error": failure})
        _write_json(out / "summary.json", summary)
        log.error("reconstruction failed: %s", failure)
        return 1
    result.write_trace_csv(out / "trace.csv")
    result.final_q.to_csv(out / "potential.csv")
    result.final_q.to_json(out / "potential.json")
    last = result.trace[-1]
    summary.update({
        "converged": result.converged,
        "termination": result.termination_reason.value,
        "error": result.error,
        "iterations": result.iterations,
        "initial_g": result.trace[0].g_value,
        "final_g": last.g_value,
        "delta2": last.delta2,
        "delta_lambda": last.delta_lambda,
        "mean_q": mean(result.final_q),
        "mean_true": None if Q is None else mean(Q),
    })
    _write_json(out / "summary.json", summary)
    log.info("%s after %d iterations, G=%.4e", result.termination_reason.value, result.iterations, last.g_value)
    return 0 if result.termination_reason is not op.Termination.SOLVER_FAILURE else 1


def cmd_verify(args) -> int:
    bc = _bc(args)
    q = potentials.resolve(args.potential, args.grid)
    results = wronskian.verify_lemma(q, bc, args.n_max)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    wronskian.write_results_csv(results, out / "lemma.csv")
    probe = wronskian.independence_probe(q, bc, max(args.n_max, 2))
    worst = max(r.abs_error for r in results)
    ok = worst < args.tol and probe.independent
    _write_json(out / "verify.json", {
        "config": {"potential": args.potential, "grid": args.grid, "bc": bc.to_dict(),
                   "n_max": args.n_max, "tol": args.tol},
        "rows": len(results),
        "max_abs_error": worst,
        "gram_min_eigenvalue": probe.min_eigenvalue,
        "gram_condition": probe.condition,
        "passed": ok,
    })
    print(f"{len(results)} relations, max abs error {worst:.3e}, Gram min eigenvalue {probe.min_eigenvalue:.3e}")
    return 0 if ok else 1


def cmd_forward(args) -> int:
    bc = _bc(args)
    q = potentials.resolve(args.potential, args.grid)
    print("i,n,lambda")
    for i in (1, 2):
        for n in range(args.pairs):
            print(f"{i},{n},{forward.eigenvalue(q, bc, i, n)!r}")
    return 0


def _nonneg(text: str) -> float:
    v = float(text)
    if not v >= 0.0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slinverse", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def bc_flags(p):
        p.add_argument("--alpha", type=float, default=0.0, help="left angle (radians)")
        p.add_argument("--beta", type=float, default=0.0, help="first right angle")
        p.add_argument("--gamma", type=float, default=math.pi / 2, help="second right angle")

    def grid_flag(p):
        p.add_argument("--grid", type=_positive_int, default=512, help="number of grid intervals")

    p = sub.add_parser("synth", help="eigenvalues of a known potential")
    p.add_argument("--potential", default="cos", help="name or @file.json")
    p.add_argument("--pairs", type=_positive_int, default=30)
    bc_flags(p)
    grid_flag(p)
    p.add_argument("-o", "--output", default="spectra.json")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("perturb", help="add bounded uniform noise to a spectra file")
    p.add_argument("spectra")
    p.add_argument("--noise-r", type=_nonneg, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default="spectra_noisy.json")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("recover", help="reconstruct a potential from a spectra file ('stress' for the built-in sequence)")
    p.add_argument("spectra")
    p.add_argument("--q0", default="zero", help="starting potential, name or @file.json")
    p.add_argument("--true-potential", default=None, help="for the L2 error; defaults to the file's provenance")
    p.add_argument("--weights", choices=("uniform", "invsq"), default="uniform")
    p.add_argument("--functional", choices=("g", "gtilde"), default="g")
    p.add_argument("--mean-q", type=float, default=None, help="mean of the true potential (gtilde only)")
    p.add_argument("--max-iter", type=_positive_int, default=500)
    p.add_argument("--gtol", type=float, default=1e-18)
    p.add_argument("--mode", choices=("prcg", "sd"), default="prcg")
    p.add_argument("--restart-period", type=_positive_int, default=20)
    grid_flag(p)
    p.add_argument("--out-dir", default="run")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("verify", help="check the Wronskian relations numerically")
    p.add_argument("--potential", default="zero")
    p.add_argument("--n-max", type=_positive_int, default=8)
    p.add_argument("--tol", type=float, default=1e-5)
    bc_flags(p)
    grid_flag(p)
    p.add_argument("--out-dir", default="verify")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("forward", help="print eigenvalues")
    p.add_argument("--potential", default="zero")
    p.add_argument("--pairs", type=_positive_int, default=30)
    bc_flags(p)
    grid_flag(p)
    p.set_defaults(func=cmd_forward)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if hasattr(args, "alpha"):
        try:
            _bc(args)
        except InvalidBoundary as exc:
            parser.error(str(exc))
    try:
        return args.func(args)
    except (ValueError, GridError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
