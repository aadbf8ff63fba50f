import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slinverse import grid
from slinverse.grid import GridFunction


def test_zero_function_evaluates_to_zero():
    f = GridFunction([0.0, 0.0, 0.0])
    assert f(0.37) == 0.0
    assert np.all(f(np.linspace(0, 1, 11)) == 0.0)


def test_linear_data_reproduced_between_nodes():
    f = grid.sample(lambda x: x, 7)
    assert f(0.5) == pytest.approx(0.5, abs=1e-14)
    assert grid.derivative(f, 0.5) == pytest.approx(1.0, abs=1e-12)


def test_sine_interpolation_error_against_closed_form():
    f = grid.sample(lambda x: np.sin(np.pi * x), 128)
    x = np.random.default_rng(3).uniform(0, 1, 10_000)
    assert np.max(np.abs(f(x) - np.sin(np.pi * x))) < 1e-6


def test_node_values_are_exact():
    f = grid.sample(lambda x: x**2, 64)
    for k in (0, 1, 17, 64):
        assert f(k / 64) == f.values[k]


def test_exponential_off_node():
    f = grid.sample(np.exp, 256)
    assert abs(f(1 / 3) - math.exp(1 / 3)) < 1e-8


def test_derivative_of_constant_and_sine():
    assert np.all(np.abs(grid.derivative(grid.make(np.full(9, 4.0)), np.linspace(0, 1, 5))) < 1e-12)
    f = grid.sample(lambda x: np.sin(2 * np.pi * x), 512)
    assert abs(grid.derivative(f, 0.25)) < 1e-4


@pytest.mark.parametrize(
    "func, expected, n",
    [(lambda x: 0 * x, 0.0, 16), (lambda x: 1 + 0 * x, 1.0, 16), (lambda x: np.sin(np.pi * x), 2 / np.pi, 256)],
)
def test_integrate(func, expected, n):
    assert grid.integrate(grid.sample(func, n)) == pytest.approx(expected, abs=1e-8)


def test_cubic_quadrature_exact_on_coarse_grid():
    f = grid.sample(lambda x: 3 * x**3 - x**2 + 2, 5)
    assert grid.integrate(f) == pytest.approx(0.75 - 1 / 3 + 2, rel=1e-14)


def test_axpy_norm_inner():
    f = grid.sample(np.sin, 32)
    g = grid.sample(np.cos, 32)
    assert np.array_equal(grid.axpy(0.0, f, g).values, g.values)
    assert grid.l2_norm(grid.make(np.full(33, 2.0))) == pytest.approx(2.0, rel=1e-14)
    s = grid.sample(lambda x: np.sin(np.pi * x), 512)
    c = grid.sample(lambda x: np.cos(np.pi * x), 512)
    assert abs(grid.inner(s, c)) < 1e-9


def test_inner_matches_fine_quadrature():
    f = grid.sample(lambda x: np.exp(x) * np.sin(5 * x), 20)
    g = grid.sample(lambda x: 1 / (1 + x), 20)
    x = np.linspace(0, 1, 20001)
    from scipy.integrate import simpson
    assert grid.inner(f, g) == pytest.approx(simpson(f(x) * g(x), x=x), rel=1e-10)


def test_refinement_convergence_fourth_order():
    errs = []
    x = np.linspace(0, 1, 3001)
    for n in (16, 32, 64):
        f = grid.sample(lambda t: np.exp(np.sin(3 * t)), n)
        errs.append(np.max(np.abs(f(x) - np.exp(np.sin(3 * x)))))
    rates = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(rates) > 3.5


def test_errors():
    with pytest.raises(grid.TooFewSamples):
        GridFunction([1.0, 2.0])
    with pytest.raises(grid.NonFinite):
        GridFunction([0.0, np.nan, 1.0])
    f = grid.sample(np.sin, 8)
    with pytest.raises(grid.OutOfDomain):
        f(1.5)
    with pytest.raises(grid.OutOfDomain):
        f(-0.1)
    with pytest.raises(grid.GridMismatch):
        grid.inner(f, grid.sample(np.sin, 9))
    with pytest.raises(grid.GridError):
        GridFunction.from_dict({"n_intervals": 4, "values": [0, 1, 2]})


def test_values_are_read_only():
    f = grid.sample(np.sin, 8)
    with pytest.raises(ValueError):
        f.values[0] = 1.0


def test_serialization_round_trip(tmp_path):
    f = grid.sample(lambda x: np.cos(7 * x), 40)
    f.to_json(tmp_path / "f.json")
    g = GridFunction.from_json(tmp_path / "f.json")
    assert np.array_equal(f.values, g.values)
    assert json.loads((tmp_path / "f.json").read_text())["n_intervals"] == 40
    f.to_csv(tmp_path / "f.csv")
    rows = (tmp_path / "f.csv").read_text().splitlines()
    assert rows[0] == "x,value" and len(rows) == 42


def test_projection_reproduces_inner_products():
    n, r = 32, 6
    x = np.linspace(0, 1, n * r + 1)
    fine = np.exp(-3 * x) * np.cos(11 * x)
    p = grid.project({r: fine}, n)
    h = grid.sample(lambda t: 1 + t**2, n)
    w = np.full(x.size, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    w *= (x[1] - x[0]) / 3
    assert grid.inner(p, h) == pytest.approx(np.sum(w * fine * h(x)), rel=1e-12)


samples = st.lists(st.floats(-100, 100, allow_nan=False), min_size=3, max_size=40)


@settings(max_examples=60, deadline=None)
@given(samples, samples, st.floats(-10, 10))
def test_integrate_is_linear(a, b, s):
    m = min(len(a), len(b))
    f, g = GridFunction(a[:m]), GridFunction(b[:m])
    lhs = grid.integrate(grid.axpy(s, f, g))
    rhs = s * grid.integrate(f) + grid.integrate(g)
    scale = abs(s) * grid.integrate(grid.make(np.abs(f.values) + 1)) + grid.integrate(grid.make(np.abs(g.values) + 1))
    assert abs(lhs - rhs) <= 1e-12 * scale


@settings(max_examples=60, deadline=None)
@given(samples)
def test_nodes_reproduced(vals):
    f = GridFunction(vals)
    assert np.array_equal(f(f.nodes), f.values)
