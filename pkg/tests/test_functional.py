import math

import numpy as np
import pytest

from slinverse import forward as fw, functional as fn, grid, potentials
from slinverse.functional import TargetSpectra, WeightScheme

N = 256


@pytest.fixture(scope="module")
def cos_setup():
    Q = grid.sample(lambda x: np.cos(2 * np.pi * x), N)
    return Q, fn.synthesize(Q, n_pairs=30)


def test_target_spectra_validation(tmp_path):
    with pytest.raises(ValueError):
        TargetSpectra({})
    with pytest.raises(ValueError):
        TargetSpectra({(1, 0): 5.0, (1, 1): 4.0})
    with pytest.raises(ValueError):
        TargetSpectra({(3, 0): 5.0})
    with pytest.raises(ValueError):
        TargetSpectra({(1, 0): float("inf")})
    t = TargetSpectra({(2, 1): 22.0, (1, 0): 9.8, (2, 0): 2.4}, provenance={"x": 1})
    assert t.indices == [(1, 0), (2, 0), (2, 1)]
    t.to_json(tmp_path / "t.json")
    back = TargetSpectra.from_json(tmp_path / "t.json")
    assert back == t and back.provenance == {"x": 1}
    with pytest.raises(ValueError):
        TargetSpectra.from_dict({"entries": [{"i": 1, "n": 0, "lambda": 1.0}, {"i": 1, "n": 0, "lambda": 2.0}]})


def test_weights():
    assert fn.weight_of(fn.UNIFORM, (2, 17)) == 1.0
    inv = WeightScheme.inverse_square()
    assert fn.weight_of(inv, (1, 0)) == 1.0
    assert fn.weight_of(inv, (1, 4)) == pytest.approx(1 / 25)
    custom = WeightScheme.from_mapping({(1, 0): 0.5})
    assert fn.weight_of(custom, (1, 0)) == 0.5
    with pytest.raises(fn.MissingWeight):
        fn.weight_of(custom, (2, 0))
    with pytest.raises(ValueError):
        WeightScheme.from_mapping({(1, 0): -1.0})


def test_exact_fit(cos_setup):
    Q, T = cos_setup
    ev = fn.evaluate(Q, T)
    assert ev.value < 1e-12
    assert max(abs(r) for r in ev.residuals.values()) < 1e-6


def test_forced_residual():
    q = grid.sample(lambda x: 0 * x, N)
    lam = fw.eigenvalue(q, fw.DEFAULT_BC, 1, 3)
    ev = fn.evaluate(q, TargetSpectra({(1, 3): lam - 2.0}))
    assert ev.value == pytest.approx(4.0, rel=1e-12)
    assert ev.value == pytest.approx(sum(ev.weights[k] * r * r for k, r in ev.residuals.items()), rel=1e-12)


def test_stress_sequence_initial_value():
    value, _ = fn.objective_value(grid.sample(lambda x: 0 * x, N), potentials.stress_spectra())
    assert 1e4 <= value <= 1e5


def test_gradient_check_zero_direction(cos_setup):
    Q, T = cos_setup
    q = grid.sample(lambda x: 0 * x, N)
    a, f = fn.gradient_check(q, T, fn.UNIFORM, grid.sample(lambda x: 0 * x, N))
    assert a == 0.0 and f == 0.0


def test_gradient_check_constant_direction():
    q = grid.sample(lambda x: 0 * x, N)
    T = fn.synthesize(grid.sample(lambda x: 1 + 0 * x, N), n_pairs=10)
    ev = fn.evaluate(q, T)
    a, f = fn.gradient_check(q, T, fn.UNIFORM, grid.sample(lambda x: 1 + 0 * x, N))
    assert a == pytest.approx(2 * sum(ev.residuals.values()), rel=1e-6)
    assert a == pytest.approx(f, rel=1e-4)


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("weights", [fn.UNIFORM, WeightScheme.inverse_square()])
def test_gradient_matches_finite_difference(cos_setup, seed, weights):
    _, T = cos_setup
    rng = np.random.default_rng(seed)
    c = rng.normal(size=3)
    q = grid.sample(lambda x: c[0] * np.sin(3 * x) + c[1] * x**2, N)
    h = grid.sample(lambda x: np.exp(-30 * (x - 0.2 - 0.6 * rng.random()) ** 2) + c[2] * 0.1, N)
    a, f = fn.gradient_check(q, T, weights, h)
    assert abs(a - f) <= 1e-4 * abs(f)


def test_descent_direction_at_non_minimum(cos_setup):
    _, T = cos_setup
    q = grid.sample(lambda x: 0.5 * x, N)
    ev = fn.evaluate(q, T)
    assert ev.value > 1e-6
    g = ev.gradient
    assert grid.l2_norm(g) > 0
    a, f = fn.gradient_check(q, T, fn.UNIFORM, -g)
    assert a < 0 and f < 0


def test_shift_pairing():
    Q = grid.sample(lambda x: np.cos(2 * np.pi * x), N)
    q = grid.sample(lambda x: x, N)
    one = grid.make(np.full(N + 1, 2.5))
    base, _ = fn.objective_value(q, fn.synthesize(Q, n_pairs=10))
    shifted, _ = fn.objective_value(q + one, fn.synthesize(Q + one, n_pairs=10))
    assert shifted == pytest.approx(base, abs=1e-9)


def test_tilde_form(cos_setup):
    Q, T = cos_setup
    mean_Q = grid.mean(Q)
    assert fn.evaluate_tilde(Q, T, mean_Q=mean_Q).value < 1e-12
    shifted = Q + grid.make(np.full(N + 1, 1.7))
    assert fn.evaluate_tilde(shifted, T, mean_Q=mean_Q).value < 1e-10
    q = grid.sample(lambda x: np.sin(5 * x), N)
    ev = fn.evaluate_tilde(q, T, mean_Q=mean_Q)
    assert abs(grid.mean(ev.gradient)) < 1e-8 * max(1.0, grid.l2_norm(ev.gradient))
    h = grid.sample(lambda x: np.cos(3 * x), N)
    a, f = fn.gradient_check(q, T, fn.UNIFORM, h, mean_Q=mean_Q)
    assert abs(a - f) <= 1e-4 * abs(f)


def test_interlacing():
    assert fn.validate_interlacing(TargetSpectra({(1, 0): 1, (1, 1): 3, (2, 0): 2, (2, 1): 4})).pattern == "1<2"
    bad = fn.validate_interlacing(TargetSpectra({(1, 0): 1, (1, 1): 2, (2, 0): 5, (2, 1): 6}))
    assert not bad.holds and any(v.n == 0 for v in bad.violations)
    Q = grid.sample(lambda x: np.cos(2 * np.pi * x), N)
    rep = fn.validate_interlacing(fn.synthesize(Q, n_pairs=15))
    assert rep.holds and rep.pattern == "2<1"


def test_solver_failure_propagates(monkeypatch, cos_setup):
    Q, T = cos_setup

    def boom(*a, **k):
        raise fw.BracketFailure("no bracket")

    monkeypatch.setattr(fw, "eigenfunction", boom)
    with pytest.raises(fw.SolverError):
        fn.evaluate(Q, T)
