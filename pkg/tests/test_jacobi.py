import numpy as np
import pytest

from jmreeb.algebroid import AlgebroidModel, Section, assemble_poisson_matrix, hat_field, liouville_field
from jmreeb.calculus import ScalarField
from jmreeb.dynamics import (
    MetricModel,
    Potential,
    hamiltonian_field,
    hamiltonian_flow,
    jacobi_metric,
    kinetic_field,
    sphere_projection,
)
from jmreeb.errors import DegenerateFiberError, DomainError, EnergyDomainError
from jmreeb.jacobi import (
    JacobiPair,
    SphereBundlePoint,
    energy_jacobi_pair,
    jacobi_pair,
    poissonization_check,
    poissonization_map,
    restricted_bracket,
    sphere_membership,
)
from jmreeb.models import get_system
from jmreeb.verification import Polynomial

RIGID = get_system("rigid-body")
OSC = get_system("oscillator")
TOP = get_system("heavy-top")
LINE = AlgebroidModel.constant([[1.0]], np.zeros((1, 1, 1)))


# -- jacobi_pair ---------------------------------------------------------------------

def test_zero_fiber_point(bundle, rng):
    z = bundle.random_point(rng)
    z[bundle.base_dim:] = 0.0
    L, E = jacobi_pair(bundle.model, bundle.metric, z)
    assert np.array_equal(L, assemble_poisson_matrix(bundle.model, z))
    assert np.all(E == 0)


def test_rigid_body_reeb_field():
    _, E = jacobi_pair(RIGID.model, RIGID.metric, [0.0, 1.0, 1.0])
    assert np.allclose(E, [1 / 6, 0, 0], atol=1e-15)


@pytest.mark.parametrize("q, p", [(0.0, 0.0), (1.3, 2.0), (-0.5, -0.7)])
def test_canonical_line_pair(q, p):
    # (Delta ^ X)^{qp} = Delta^q X^p - Delta^p X^q = -p^2, so Lambda^{qp} vanishes on p = +-1
    L, E = jacobi_pair(LINE, MetricModel.identity(1), [q, p])
    assert L[0, 1] == pytest.approx(1 - p * p) and L[1, 0] == pytest.approx(p * p - 1)
    assert np.allclose(E, [-p, 0.0])


def test_pair_is_antisymmetric_and_reeb_is_minus_kinetic_field(bundle, rng):
    Xk = hamiltonian_flow(kinetic_field(bundle.metric), bundle.model)
    for _ in range(10):
        z = bundle.random_point(rng)
        L, E = jacobi_pair(bundle.model, bundle.metric, z)
        assert np.array_equal(L, -L.T)
        assert np.array_equal(E, -Xk(z))


def test_pair_rejects_points_off_domain():
    with pytest.raises(DomainError):
        jacobi_pair(TOP.model, TOP.metric, [0, 0, 2, 1, 1, 1])


def test_jacobi_conditions(bundle, rng):
    pair = JacobiPair(bundle.model, bundle.metric)
    for _ in range(10):
        r1, r2 = pair.residuals(bundle.random_point(rng))
        assert r1 < 1e-5 and r2 < 1e-5


def test_energy_jacobi_conditions(bundle, rng):
    pair = JacobiPair(bundle.model, bundle.metric, bundle.potential, bundle.energy)
    for _ in range(10):
        r1, r2 = pair.residuals(bundle.random_sphere_point(rng))
        assert r1 < 1e-5 and r2 < 1e-5


# -- energy pair ----------------------------------------------------------------------

def test_energy_pair_with_free_motion_at_half(rng):
    for _ in range(5):
        y = rng.normal(size=3)
        L1, E1 = jacobi_pair(RIGID.model, RIGID.metric, y)
        L2, E2 = energy_jacobi_pair(RIGID.model, RIGID.metric, Potential.zero(0), 0.5, y)
        assert np.allclose(L1, L2, atol=1e-15) and np.allclose(E1, E2, atol=1e-15)


@pytest.mark.parametrize("b", [TOP, OSC], ids=["heavy-top", "oscillator"])
def test_energy_reeb_is_jacobi_metric_kinetic_field(b, rng):
    ge = jacobi_metric(b.metric, b.potential, b.energy)
    Xe = hamiltonian_flow(kinetic_field(ge), b.model)
    for _ in range(10):
        z = b.random_sphere_point(rng)
        _, E = energy_jacobi_pair(b.model, b.metric, b.potential, b.energy, z)
        assert np.max(np.abs(E + Xe(z))) < 1e-9


def test_energy_pair_outside_sublevel_set():
    with pytest.raises(EnergyDomainError):
        energy_jacobi_pair(OSC.model, OSC.metric, OSC.potential, 1.0, [2.0, 0.0, 0.0, 1.0])


def test_kinetic_metric_of_energy_pair():
    pair = JacobiPair(OSC.model, OSC.metric, OSC.potential, 1.0)
    assert np.allclose(pair.kinetic_metric(np.zeros(2)), 0.5 * np.eye(2))
    assert JacobiPair(OSC.model, OSC.metric).kinetic_metric is OSC.metric


# -- sphere membership -------------------------------------------------------------------

@pytest.mark.parametrize("z, metric, V, e", [
    ([0.6, 0.8], MetricModel.identity(2), None, 0.5),
    ([1.0, 0.0, 0.0], RIGID.metric, None, 0.5),
    ([1.0, 0.0, 0.0, 1.0], OSC.metric, OSC.potential, 1.0),
])
def test_membership_zero(z, metric, V, e):
    assert sphere_membership(np.array(z), metric, V, e) == pytest.approx(0.0, abs=1e-15)


def test_membership_measures_twice_energy_gap():
    z = np.array([1.0, 0.0, 0.0, 2.0])
    H = 0.5 * (1 + 4)
    assert sphere_membership(z, OSC.metric, OSC.potential, 1.0) == pytest.approx(2 * abs(H - 1.0))


def test_sphere_point_construction():
    p = SphereBundlePoint.build([0.6, 0.8], MetricModel.identity(2))
    assert p.residual < 1e-9
    with pytest.raises(ValueError):
        SphereBundlePoint.build([0.6, 0.9], MetricModel.identity(2))


# -- restricted bracket -------------------------------------------------------------------

def test_restricted_bracket_of_function_with_itself(rng):
    pair = JacobiPair(RIGID.model, RIGID.metric)
    G = Polynomial.random(3, 2, rng).field()
    a, b = restricted_bracket(G, G, pair, rng.normal(size=3))
    assert a == pytest.approx(0.0, abs=1e-13) and b == pytest.approx(0.0, abs=1e-13)


def test_restricted_bracket_with_kinetic_energy(rng):
    # G1 = kappa: way B reduces to {kappa, G2} (1 - kappa) since Delta kappa = 2 kappa
    pair = JacobiPair(RIGID.model, RIGID.metric)
    kappa = kinetic_field(RIGID.metric)
    for _ in range(5):
        y = rng.normal(size=3)
        G2 = Polynomial.random(3, 2, rng).field()
        a, b = restricted_bracket(kappa, G2, pair, y)
        P = assemble_poisson_matrix(RIGID.model, y)
        k_g2 = kappa.grad(y) @ P @ G2.grad(y)
        assert b == pytest.approx(k_g2 * (1 - kappa(y)), rel=1e-12, abs=1e-12)
        assert a == pytest.approx(b, abs=1e-10)


@pytest.mark.parametrize("name", ["rigid-body", "heavy-top", "hyperbolic", "oscillator", "pendula"])
def test_restricted_bracket_two_ways(name, rng):
    b = get_system(name)
    pair = JacobiPair(b.model, b.metric)
    for _ in range(20):
        z = b.random_point(rng)
        G1 = Polynomial.random(b.model.dim, 2, rng).field()
        G2 = Polynomial.random(b.model.dim, 2, rng).field()
        A, B = restricted_bracket(G1, G2, pair, z)
        assert abs(A - B) < 1e-7


def test_restricted_bracket_energy_pair(rng):
    pair = JacobiPair(TOP.model, TOP.metric, TOP.potential, TOP.energy)
    for _ in range(10):
        z = TOP.random_sphere_point(rng)
        G1 = Polynomial.random(6, 2, rng).field()
        G2 = Polynomial.random(6, 2, rng).field()
        A, B = restricted_bracket(G1, G2, pair, z)
        assert abs(A - B) < 1e-7


def test_restricted_bracket_with_finite_differences(rng):
    # plain callables take the FD path in both ways
    pair = JacobiPair(RIGID.model, RIGID.metric)
    G1 = lambda y: np.sin(y[0]) * y[1]
    G2 = lambda y: y[2] ** 3 + y[0]
    A, B = restricted_bracket(G1, G2, pair, np.array([0.3, -0.7, 1.1]))
    assert abs(A - B) < 1e-7


# -- Poissonization -------------------------------------------------------------------------

def test_poissonization_map_scales_fiber():
    out = poissonization_map([0.1, 0.2, 1.0, 2.0], np.log(3.0), 2)
    assert np.allclose(out, [0.1, 0.2, 3.0, 6.0])


def test_poissonization_base_functions():
    pair = JacobiPair(OSC.model, OSC.metric)
    beta = sphere_projection(np.array([0.3, -0.2, 1.0, 0.5]), OSC.metric)
    F = ScalarField(lambda z: z[0] ** 2, lambda z: np.array([2 * z[0], 0, 0, 0]))
    G = ScalarField(lambda z: z[1], lambda z: np.array([0, 1.0, 0, 0]))
    lhs, rhs = poissonization_check(F, G, beta, 0.0, pair)
    assert lhs == 0.0 and rhs == pytest.approx(0.0, abs=1e-15)


def test_poissonization_at_zero_time(rng):
    pair = JacobiPair(RIGID.model, RIGID.metric)
    beta = sphere_projection(rng.normal(size=3), RIGID.metric)
    F = Polynomial.random(3, 2, rng).field()
    G = Polynomial.random(3, 2, rng).field()
    lhs, rhs = poissonization_check(F, G, beta, 0.0, pair)
    P = assemble_poisson_matrix(RIGID.model, beta)
    assert lhs == pytest.approx(F.grad(beta) @ P @ G.grad(beta), rel=1e-14)
    assert abs(lhs - rhs) < 1e-12


def test_poissonization_rigid_body_hats():
    pair = JacobiPair(RIGID.model, RIGID.metric)
    beta = SphereBundlePoint.build(sphere_projection(np.array([0.3, 0.4, 0.5]), RIGID.metric), RIGID.metric)
    e = np.eye(3)
    F = hat_field(Section.constant(e[0]), 0)
    G = hat_field(Section.constant(e[1]), 0)
    lhs, rhs = poissonization_check(F, G, beta, 0.7, pair)
    assert abs(lhs - rhs) < 1e-6
    assert lhs == pytest.approx(-np.exp(0.7) * beta.z[2])


def test_poissonization_with_finite_differences(rng):
    pair = JacobiPair(OSC.model, OSC.metric)
    beta = sphere_projection(np.array([0.3, -0.2, 1.0, 0.5]), OSC.metric)
    F = lambda z: np.sin(z[0]) * z[2]
    G = lambda z: z[1] * z[3] ** 2
    lhs, rhs = poissonization_check(F, G, beta, -0.4, pair)
    assert abs(lhs - rhs) < 1e-6


def test_poissonization_rejects_zero_section():
    pair = JacobiPair(RIGID.model, RIGID.metric)
    F = Polynomial(np.ones(1), np.zeros((1, 3))).field()
    with pytest.raises(DegenerateFiberError):
        poissonization_check(F, F, np.zeros(3), 0.0, pair)


# -- tangency of the restriction ------------------------------------------------------------

def test_pair_restricts_to_sphere(bundle, rng):
    pair = JacobiPair(bundle.model, bundle.metric)
    kappa = kinetic_field(bundle.metric)
    Xk = hamiltonian_flow(kappa, bundle.model)
    for _ in range(10):
        z = bundle.random_point(rng)
        L, E = pair(z)
        dk = kappa.grad(z)
        assert np.max(np.abs(dk @ L + (1 - 2 * kappa(z)) * Xk(z))) < 1e-7
        assert abs(dk @ E) < 1e-9


def test_liouville_pairing_on_energy_level(bundle, rng):
    H = hamiltonian_field(bundle.metric, bundle.potential)
    m = bundle.base_dim
    for _ in range(10):
        z = bundle.random_sphere_point(rng)
        gap = bundle.energy - bundle.potential(z[:m])
        assert H.grad(z) @ liouville_field(z, m) == pytest.approx(2 * gap, abs=1e-9)
