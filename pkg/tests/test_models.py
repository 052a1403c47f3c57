import numpy as np
import pytest

from jmreeb.dynamics import (
    MetricModel,
    Potential,
    hamiltonian_field,
    hamiltonian_flow,
    integrate,
    jacobi_metric,
    kinetic_field,
)
from jmreeb.errors import ConfigError
from jmreeb.jacobi import jacobi_pair
from jmreeb.models import (
    SYSTEMS,
    canonical_cotangent,
    coupled_pendula,
    cotangent_custom,
    gaussian_curvature_oracle,
    get_system,
    heavy_top,
    hyperbolic_metric,
    closed_form_curvature,
    so3_rigid_body,
)


def flow(b, potential=None):
    V = b.potential if potential is None else potential
    return hamiltonian_flow(hamiltonian_field(b.metric, V), b.model)


# -- registry --------------------------------------------------------------------

def test_registry_names():
    assert set(SYSTEMS) == {"oscillator", "hyperbolic", "rigid-body", "heavy-top", "pendula",
                            "cotangent-custom"}


def test_unknown_system():
    with pytest.raises(ConfigError):
        get_system("double-pendulum")


def test_initial_points_sit_on_energy_level(bundle):
    H = hamiltonian_field(bundle.metric, bundle.potential)
    assert H(bundle.initial) == pytest.approx(bundle.energy, abs=1e-14)


def test_reference_values_are_described(bundle):
    for ref in bundle.reference.values():
        assert ref.note and ref.value is not None


# -- oscillator and free particle ----------------------------------------------------

def test_oscillator_closed_form():
    b = get_system("oscillator")
    traj = integrate(flow(b), b.initial, (0.0, 5.0), "rk4", 1e-3)
    assert np.max(np.abs(traj.z - b.reference["solution"].value(traj.s))) < 1e-9


def test_oscillator_sublevel_set():
    # V = |q|^2 / 2, so U_1 is the open disk of radius sqrt(2)
    b = get_system("oscillator")
    assert b.potential([0.8, 0.9]) < 1.0
    assert b.potential([1.0, 0.999]) < 1.0
    assert not b.potential([1.0, 1.0]) < 1.0


def test_oscillator_amplitudes_fix_energy():
    # A1^2 + A2^2 + B1^2 + B2^2 = 2e for c(t) = A sin t + B cos t
    b = get_system("oscillator")
    assert np.sum(b.initial ** 2) == pytest.approx(2 * b.energy)


def test_free_particle_moves_on_straight_lines():
    b = canonical_cotangent(2)
    z0 = np.array([0.5, -1.0, 0.3, 0.4])
    traj = integrate(flow(b), z0, (0.0, 2.0), "rk4", 0.1, base_dim=2)
    assert np.allclose(traj.y, z0[2:], atol=1e-15)
    assert np.allclose(traj.q, z0[:2] + traj.s[:, None] * z0[2:], atol=1e-13)


def test_canonical_cotangent_needs_base():
    with pytest.raises(ConfigError):
        canonical_cotangent(0)


# -- hyperbolic plane ------------------------------------------------------------------

@pytest.mark.parametrize("q", [(0.0, 1.0), (0.3, 0.5), (-2.0, 3.0)])
def test_hyperbolic_curvature(q):
    assert gaussian_curvature_oracle(hyperbolic_metric(), q) == pytest.approx(-1.0, abs=1e-6)


def test_hyperbolic_jacobi_metric_at_half_energy():
    b = get_system("hyperbolic")
    ge = jacobi_metric(b.metric, b.potential, 0.5)
    q = np.array([0.0, 1.0])
    assert np.array_equal(ge(q), b.metric(q))
    assert gaussian_curvature_oracle(ge, q) == pytest.approx(-1.0, abs=1e-4)


def test_vertical_geodesic_stays_vertical():
    b = get_system("hyperbolic")
    traj = integrate(flow(b), np.array([0.0, 1.0, 0.0, 1.0]), (0.0, 3.0), "rk4", 1e-3, base_dim=2)
    assert np.max(np.abs(traj.q[:, 0])) < 1e-14
    # along x = 0 the geodesic is y = e^t
    assert traj.q[-1, 1] == pytest.approx(np.exp(3.0), rel=1e-9)


def test_curvature_of_flat_metric():
    assert gaussian_curvature_oracle(MetricModel.identity(2), [0.3, 0.2]) == pytest.approx(0.0, abs=1e-12)


def test_curvature_of_round_conformal_metric():
    # 4/(1+r^2)^2 (dx^2+dy^2) has curvature +1
    M = MetricModel(2, lambda q: (1 + q @ q) ** 2 / 4 * np.eye(2))
    assert gaussian_curvature_oracle(M, [0.4, -0.3]) == pytest.approx(1.0, abs=1e-6)


def test_curvature_oracle_rejects_non_conformal():
    with pytest.raises(ConfigError):
        gaussian_curvature_oracle(MetricModel.constant(np.diag([1.0, 2.0])), [0.0, 0.0])
    with pytest.raises(ConfigError):
        gaussian_curvature_oracle(MetricModel.identity(3), [0.0, 0.0, 0.0])


def test_closed_form_curvature_disagrees_with_oracle():
    # reported only; at (0, 1) with V = 0 the closed form gives -1/2 instead of -1
    assert closed_form_curvature([0.0, 1.0]) == -0.5


# -- rigid body --------------------------------------------------------------------------

def test_rigid_body_sphere():
    b = so3_rigid_body()
    y = b.initial
    assert y[0] ** 2 / 1 + y[1] ** 2 / 2 + y[2] ** 2 / 3 == pytest.approx(1.0)


def test_isotropic_body_has_no_kinetic_flow(rng):
    b = so3_rigid_body((2.0, 2.0, 2.0))
    Xk = hamiltonian_flow(kinetic_field(b.metric), b.model)
    for _ in range(5):
        assert np.allclose(Xk(rng.normal(size=3)), 0.0, atol=1e-15)


def test_rigid_body_rejects_bad_moments():
    with pytest.raises(ConfigError):
        so3_rigid_body((1.0, -2.0, 3.0))


def test_rigid_body_reeb():
    b = so3_rigid_body()
    _, E = jacobi_pair(b.model, b.metric, [0.0, 1.0, 1.0])
    assert np.allclose(E, [1 / 6, 0, 0])


# -- heavy top -------------------------------------------------------------------------------

def test_heavy_top_potential():
    assert heavy_top(mass=2.0).potential([0.0, 0.0, 1.0]) == 2.0


def test_heavy_top_sublevel_set_is_whole_sphere(rng):
    b = heavy_top()
    for _ in range(20):
        q = rng.normal(size=3)
        q /= np.linalg.norm(q)
        assert b.potential(q) < b.energy


def test_heavy_top_params():
    b = get_system("heavy-top", {"mgl": 3.0, "a": [1.0, 0.0, 0.0], "I": [2, 2, 1]})
    assert b.energy == 6.0
    assert b.potential([1.0, 0.0, 0.0]) == 3.0
    with pytest.raises(ConfigError):
        heavy_top(a=(0.0, 0.0, 2.0))
    with pytest.raises(ConfigError):
        heavy_top(mass=0.0)


def test_heavy_top_casimirs():
    b = get_system("heavy-top")
    H = hamiltonian_field(b.metric, b.potential)
    conserved = {q.name: q.fn for q in b.quantities if q.conserved}
    assert set(conserved) == {"H", "casimir_qq", "q_dot_y"}
    traj = integrate(flow(b), b.initial, (0.0, 10.0), "rk4", 1e-3, hamiltonian=H, conserved=conserved)
    for name, values in traj.quantities.items():
        assert np.max(np.abs(values - values[0])) < 1e-8, name


def test_heavy_top_lagrange_equations(rng):
    # q' = q x Omega, y' = y x Omega + mgl q x a, Omega = I^{-1} y
    b = get_system("heavy-top")
    X = flow(b)
    I = np.array([1.0, 2.0, 3.0])
    a = np.array([0.0, 0.0, 1.0])
    for _ in range(5):
        z = b.random_point(rng)
        q, y = z[:3], z[3:]
        Om = y / I
        want = np.concatenate([np.cross(q, Om), np.cross(y, Om) + np.cross(q, a)])
        assert np.allclose(X(z), want, atol=1e-14)


# -- coupled pendula -----------------------------------------------------------------------------

def test_pendula_jacobi_metric_field(rng):
    b = get_system("pendula")
    ge = jacobi_metric(b.metric, b.potential, b.energy)
    Xe = hamiltonian_flow(kinetic_field(ge), b.model)
    for _ in range(10):
        z = b.random_sphere_point(rng)
        psi, p, _ = z
        gap = b.energy - b.potential([psi])
        want = np.array([p, -b.potential.grad([psi])[0], 0.0]) / (2 * gap)
        assert np.allclose(Xe(z), want, atol=1e-12)


def test_pendula_central_momentum_is_constant():
    b = get_system("pendula")
    traj = integrate(flow(b), b.initial, (0.0, 5.0), "rk4", 1e-3, base_dim=1)
    assert np.all(traj.y[:, 1] == b.initial[2])


def test_pendula_free_rotation():
    b = coupled_pendula(Potential.zero(1))
    z0 = np.array([0.1, 0.8, 0.6])
    traj = integrate(flow(b), z0, (0.0, 4.0), "rk4", 0.01, base_dim=1)
    assert np.allclose(traj.q[:, 0], 0.1 + 0.8 * traj.s, atol=1e-12)


# -- configurable cotangent bundle ------------------------------------------------------------

def test_cotangent_custom_options():
    b = cotangent_custom(2, [2.0, 1.0], [1.0, 4.0])
    assert np.array_equal(b.metric(np.zeros(2)), np.diag([2.0, 1.0]))
    assert b.potential([1.0, 1.0]) == 2.5
    with pytest.raises(ConfigError):
        cotangent_custom(2, [[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(ConfigError):
        cotangent_custom(2, np.eye(3))
