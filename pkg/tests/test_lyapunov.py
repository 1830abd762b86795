import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from roughstab.dynamics import VectorFieldSystem, limit_drift
from roughstab.errors import DomainError, EquilibriumViolationError, InvalidParameterError
from roughstab.lyapunov import (
    ScalarFunction,
    Verdict,
    check_asir,
    check_uasas_condition,
    dv_along_limit,
    generator_monte_carlo,
    lie_derivative,
    parse_grid_spec,
    quadratic,
    radial_grid,
    rough_generator,
    second_lie_derivative,
    stochastic_generator,
    system_second_lie_derivative,
)
from roughstab.signals import oscillatory_rate_matrix, wiener_limit_rate_matrix
from roughstab.systems import A1_2D, A2_2D, LinearField, example_1d, linear_system, motivational_2d

V = quadratic(2)
G1, G2 = LinearField(A1_2D), LinearField(A2_2D)


def rotation(x):
    x = np.asarray(x)
    return np.stack([-x[..., 1], x[..., 0]], axis=-1)


def test_lie_derivative_examples():
    assert lie_derivative(V, G1, [1.0, 1.0]) == 2.0
    pts = np.random.default_rng(0).normal(size=(20, 2))
    np.testing.assert_allclose(lie_derivative(V, G1, pts), 2 * pts[:, 0] * pts[:, 1], atol=1e-14)
    np.testing.assert_allclose(lie_derivative(V, rotation, pts), 0.0, atol=1e-14)
    assert lie_derivative(V, np.zeros_like, [3.0, 4.0]) == 0.0


def test_second_lie_derivative_examples():
    assert second_lie_derivative(V, G1, G1, [1.0, 0.0], G1.jacobian) == 2.0
    assert second_lie_derivative(V, G2, G2, [1.0, 1.0], G2.jacobian) == 18.0
    # finite-difference path gives the same values
    assert second_lie_derivative(V, G2, G2, [1.0, 1.0]) == pytest.approx(18.0, rel=1e-6)
    pts = np.random.default_rng(1).normal(size=(10, 2))
    np.testing.assert_allclose(
        second_lie_derivative(V, G2, G2, pts, G2.jacobian), -6 * pts[:, 1] ** 2 + 24 * pts[:, 0] ** 2, atol=1e-12
    )
    assert second_lie_derivative(V, G2, np.zeros_like, [1.0, 2.0], G2.jacobian) == 0.0


def test_domain_errors():
    v = quadratic(2, radius=1.0)
    with pytest.raises(DomainError):
        lie_derivative(v, G1, [2.0, 0.0])
    with pytest.raises(DomainError):
        second_lie_derivative(v, G1, G1, [0.0, 3.0])


def test_dv_along_limit_examples():
    pts = np.random.default_rng(2).normal(size=(30, 2))
    dv = dv_along_limit(V, LinearField(np.diag([-1.0, -5.0])), pts)
    np.testing.assert_allclose(dv, -2 * pts[:, 0] ** 2 - 10 * pts[:, 1] ** 2, atol=1e-12)
    assert np.all(dv < 0)
    boundary = dv_along_limit(V, LinearField(np.diag([-6.0, 0.0])), pts)
    np.testing.assert_allclose(boundary, -12 * pts[:, 0] ** 2, atol=1e-12)
    assert dv_along_limit(V, LinearField(np.diag([-6.0, 0.0])), [0.0, 5.0]) == 0.0
    assert dv_along_limit(V, np.zeros_like, [1.0, 1.0]) == 0.0


def test_stochastic_generator_examples():
    g = motivational_2d()
    pts = np.random.default_rng(3).normal(size=(25, 2))
    np.testing.assert_allclose(stochastic_generator(V, g, pts), -np.sum(pts**2, axis=1), atol=1e-12)
    assert stochastic_generator(V, g, [1.0, 1.0]) == pytest.approx(-2.0, abs=1e-14)
    quiet = linear_system(np.diag([-7.0, 1.0]), np.zeros((2, 2)))
    np.testing.assert_allclose(stochastic_generator(V, quiet, pts), lie_derivative(V, quiet.fields[0], pts))


def test_generator_monte_carlo_agrees():
    g = motivational_2d()
    mean, se = generator_monte_carlo(V, g, [1.0, 1.0], delta=1e-3, n_paths=10_000, seed=0)
    assert abs(mean - stochastic_generator(V, g, [1.0, 1.0])) <= 3 * se
    mean_cv, se_cv = generator_monte_carlo(V, g, [1.0, 1.0], n_paths=10_000, control_variate=True)
    assert se_cv < se / 5
    assert abs(mean_cv + 2.0) <= 3 * se_cv
    # the no-1/2 reading of the generator would give +8 at (1, 1)
    assert abs(mean_cv - 8.0) > 3 * se_cv


@pytest.mark.parametrize("system", [motivational_2d, example_1d])
def test_generator_identity(system):
    g = system()
    v = quadratic(g.n)
    pts = np.random.default_rng(4).normal(size=(15, g.n))
    np.testing.assert_allclose(
        stochastic_generator(v, g, pts), rough_generator(v, g, wiener_limit_rate_matrix(g.m), pts), rtol=0, atol=1e-12
    )


@pytest.mark.parametrize("b1,b2", [(3, 4), (1, 1), (0.5, 2)])
def test_bracket_drift_identity(b1, b2):
    for g in (motivational_2d(), example_1d()):
        v = quadratic(g.n)
        gamma = oscillatory_rate_matrix(b1, b2)
        pts = np.random.default_rng(5).normal(size=(12, g.n))
        direct = dv_along_limit(v, limit_drift(g, gamma), pts)
        grad = v.gradient(pts)
        summed = lie_derivative(v, g.fields[0], pts)
        for j in range(3):
            for k in range(3):
                if gamma.gamma[k, j]:
                    jg = np.einsum("pab,pb->pa", g.jacobian(j, pts), g.field(k, pts))
                    summed = summed + gamma.gamma[k, j] * np.einsum("pa,pa->p", grad, jg)
        np.testing.assert_allclose(direct, summed, atol=1e-10)


def test_uasas_examples():
    g = motivational_2d()
    res = check_uasas_condition(V, g, [[1.0, 1.0]])
    assert not res.holds and res.channel == 1 and res.value == 2.0
    assert check_uasas_condition(V, linear_system(np.zeros((2, 2)), [[0, -1.0], [1.0, 0]]), radial_grid(2)).holds
    assert check_uasas_condition(V, linear_system(-np.eye(2), np.zeros((2, 2))), radial_grid(2)).holds
    with pytest.raises(InvalidParameterError):
        check_uasas_condition(V, g, np.zeros((0, 2)))


def test_check_asir_examples():
    report = check_asir(V, LinearField(np.diag([-1.0, -5.0])), n=2, radius=10)
    assert report.verdict == Verdict.GLOBALLY_ASIR
    assert report.tested_radius == pytest.approx(10.0)
    assert report.margin == pytest.approx(2.0)
    assert "up to tested radius 10" in report.summary()
    boundary = check_asir(V, LinearField(np.diag([-6.0, 0.0])), n=2)
    assert boundary.verdict == Verdict.STABLE and len(boundary.violations) == 0
    bad = check_asir(quadratic(1), lambda x: np.asarray(x), n=1)
    assert bad.verdict == Verdict.NOT_CERTIFIED and len(bad.violations) > 0


def test_check_asir_local_only():
    def drift(x):
        x = np.asarray(x)
        return -x * np.exp(-np.sum(x * x, axis=-1, keepdims=True))

    assert check_asir(quadratic(1), drift, n=1).verdict == Verdict.LOCALLY_ASIR


def test_check_asir_rejects_shifted_equilibrium():
    with pytest.raises(EquilibriumViolationError):
        check_asir(V, lambda x: np.asarray(x) - 1.0, n=2)


def test_check_asir_sandwich():
    semi = ScalarFunction(lambda x: np.asarray(x)[..., 0] ** 2, radius=np.inf)
    report = check_asir(semi, LinearField(-np.eye(2)), n=2)
    assert report.verdict == Verdict.NOT_CERTIFIED and report.reasons


@pytest.mark.parametrize("b1b2,expected", [(12.0, Verdict.GLOBALLY_ASIR), (2.0, Verdict.STABLE), (14.0, Verdict.STABLE), (16.0, Verdict.NOT_CERTIFIED)])
def test_motivational_verdicts(b1b2, expected):
    drift = limit_drift(motivational_2d(), oscillatory_rate_matrix(b1b2, 1.0))
    assert check_asir(V, drift, n=2).verdict == expected


def test_grid_layout():
    grid = radial_grid(2)
    assert grid.shape == (24 * 40, 2)
    r = np.linalg.norm(grid, axis=1)
    assert r.min() == pytest.approx(1e-3) and r.max() == pytest.approx(10.0)
    assert radial_grid(1, shells=3).shape == (6, 1)
    g3 = radial_grid(3, shells=2, directions=10)
    assert g3.shape == (20, 3) and np.allclose(np.linalg.norm(g3[10:], axis=1), 10.0)
    assert parse_grid_spec("radius=5,shells=8,local=0.5") == {"radius": 5.0, "shells": 8, "local": 0.5}
    with pytest.raises(InvalidParameterError):
        parse_grid_spec("width=3")


def test_report_csv(tmp_path):
    report = check_asir(V, LinearField(np.diag([-1.0, -5.0])), n=2, shells=3, directions=4)
    report.to_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "# verdict=globally-ASiR"
    assert lines[2] == "x1,x2,v,DV,violation" and len(lines) == 3 + 12


linear_drifts = st.lists(st.integers(-3000, 3000), min_size=4, max_size=4).map(
    lambda c: np.array(c, dtype=float).reshape(2, 2) / 1000
)


@settings(max_examples=60, deadline=None)
@given(linear_drifts)
def test_scale_covariance(A):
    drift = LinearField(A)
    grid = radial_grid(2, shells=6, directions=8)
    a = check_asir(V, drift, grid)
    b = check_asir(V.scaled(2.0), drift, grid)
    np.testing.assert_allclose(b.dv, 2 * a.dv, rtol=1e-15, atol=0)
    assert a.verdict == b.verdict


@settings(max_examples=60, deadline=None)
@given(linear_drifts)
def test_tiers_monotone(A):
    grid = radial_grid(2, shells=6, directions=8)
    report = check_asir(V, LinearField(A), grid)
    if report.verdict >= Verdict.STABLE:
        assert np.all(report.dv <= 1e-9)
    if report.verdict == Verdict.GLOBALLY_ASIR:
        r2 = np.sum(report.grid**2, axis=1)
        local = r2 <= 1.0
        assert np.min(-report.dv[local] / r2[local]) >= 1e-6
        assert report.certifies(Verdict.LOCALLY_ASIR) and report.certifies(Verdict.STABLE)


# random polynomial oracle for analytic vs nested finite differences

@st.composite
def polynomial_setup(draw):
    n = draw(st.integers(1, 3))
    xs = sp.symbols(f"x0:{n}")
    monomials = [sp.Integer(1)] + list(xs)
    for deg in range(2, 5):
        monomials += [sp.Mul(*c) for c in __import__("itertools").combinations_with_replacement(xs, deg)]
    coeff = st.integers(-3, 3)

    def poly(k):
        picks = draw(st.lists(st.tuples(st.sampled_from(monomials), coeff), min_size=1, max_size=k))
        return sum((c * m for m, c in picks), sp.Integer(0))

    v = poly(6)
    gj = [poly(3) for _ in range(n)]
    gk = [poly(3) for _ in range(n)]
    point = draw(st.lists(st.floats(-1, 1, allow_nan=False), min_size=n, max_size=n))
    return xs, v, gj, gk, np.array(point)


def _lam(xs, expr):
    f = sp.lambdify([xs], expr, "numpy")
    return lambda x: np.asarray(f(np.asarray(x)), dtype=float)


@settings(max_examples=50, deadline=None)
@given(polynomial_setup())
def test_analytic_matches_finite_difference(setup):
    xs, v, gj, gk, x = setup
    grad = [sp.diff(v, s) for s in xs]
    hess = [[sp.diff(v, a, b) for b in xs] for a in xs]
    jac = [[sp.diff(f, s) for s in xs] for f in gj]
    field_j = _lam(xs, sp.Matrix(gj).T)
    field_k = _lam(xs, sp.Matrix(gk).T)
    analytic = ScalarFunction(_lam(xs, v), lambda y: _lam(xs, sp.Matrix(grad).T)(y).reshape(-1), lambda y: _lam(xs, sp.Matrix(hess))(y))
    numeric = ScalarFunction(_lam(xs, v))
    gj_f = lambda y: field_j(y).reshape(-1)  # noqa: E731
    gk_f = lambda y: field_k(y).reshape(-1)  # noqa: E731
    jac_f = lambda y: _lam(xs, sp.Matrix(jac))(y)  # noqa: E731

    exact1 = float(sum(gr * f for gr, f in zip(grad, gj)).subs(dict(zip(xs, x))))
    exact2 = float(sum(sp.diff(sum(gr * f for gr, f in zip(grad, gj)), s) * f for s, f in zip(xs, gk)).subs(dict(zip(xs, x))))
    a1 = float(lie_derivative(analytic, gj_f, x))
    n1 = float(lie_derivative(numeric, gj_f, x))
    a2 = float(second_lie_derivative(analytic, gj_f, gk_f, x, jac_f))
    n2 = float(second_lie_derivative(numeric, gj_f, gk_f, x))
    assert a1 == pytest.approx(exact1, rel=1e-12, abs=1e-12)
    assert a2 == pytest.approx(exact2, rel=1e-12, abs=1e-10)
    assert n1 == pytest.approx(a1, rel=1e-5, abs=1e-5)
    assert n2 == pytest.approx(a2, rel=1e-5, abs=1e-5)


def test_system_second_lie_derivative_uses_jacobians():
    g = motivational_2d()
    assert system_second_lie_derivative(V, g, 2, 2, [1.0, 1.0]) == 18.0
    assert system_second_lie_derivative(V, g, 1, 1, [1.0, 0.0]) == 2.0
