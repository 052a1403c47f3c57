"""Ready-made systems: oscillator, hyperbolic plane, rigid body, heavy top,
coupled pendula and a configurable canonical cotangent bundle."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .algebroid import AlgebroidModel
from .dynamics import MetricModel, Potential, mechanical_hamiltonian, sphere_projection
from .errors import ConfigError

LEVI_CIVITA = np.zeros((3, 3, 3))
for _a, _b, _c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    LEVI_CIVITA[_a, _b, _c] = 1.0
    LEVI_CIVITA[_b, _a, _c] = -1.0
LEVI_CIVITA.setflags(write=False)


@dataclass(frozen=True)
class Quantity:
    name: str
    fn: Callable[[np.ndarray], float]
    conserved: bool = True


@dataclass(frozen=True)
class Reference:
    value: object
    note: str


@dataclass(frozen=True)
class SystemBundle:
    name: str
    model: AlgebroidModel
    metric: MetricModel
    potential: Potential
    energy: float
    initial: np.ndarray
    quantities: tuple[Quantity, ...] = ()
    reference: dict[str, Reference] = field(default_factory=dict)
    sample_base: Callable[[np.random.Generator], np.ndarray] | None = None
    params: dict = field(default_factory=dict)

    @property
    def base_dim(self):
        return self.model.base_dim

    @property
    def fiber_dim(self):
        return self.model.fiber_dim

    def hamiltonian(self, z):
        return mechanical_hamiltonian(self.metric, self.potential, z)

    def random_point(self, rng, fiber_scale=2.0):
        """Point with base drawn from the chart sampler and |y|_inf <= fiber_scale."""
        q = self.sample_base(rng) if self.sample_base is not None else rng.uniform(-1, 1, self.base_dim)
        y = rng.uniform(-fiber_scale, fiber_scale, self.fiber_dim)
        return np.concatenate([q, y])

    def random_sphere_point(self, rng, e=None):
        """Point of H^{-1}(e) with random direction in the fiber."""
        e = self.energy if e is None else e
        for _ in range(1000):
            z = self.random_point(rng, 1.0)
            if self.potential(z[: self.base_dim]) < e and np.linalg.norm(z[self.base_dim:]) > 1e-3:
                return sphere_projection(z, self.metric, self.potential, e)
        raise ConfigError(f"{self.name}: could not sample U_e for e={e}")


def canonical_cotangent(m: int, potential: Potential | None = None,
                        metric: MetricModel | None = None, *, name="cotangent",
                        energy=0.5, initial=None, domain=None, sample_base=None) -> SystemBundle:
    """T*Q with its canonical Poisson structure: rho = identity, C = 0."""
    if m < 1:
        raise ConfigError("canonical cotangent bundle needs m >= 1")
    model = AlgebroidModel.constant(np.eye(m), np.zeros((m, m, m)), name=name)
    if domain is not None:
        model = AlgebroidModel(m, m, model.anchor, model.structure, domain, name)
    metric = metric if metric is not None else MetricModel.identity(m)
    potential = potential if potential is not None else Potential.zero(m)
    if initial is None:
        initial = np.concatenate([np.zeros(m), np.eye(m)[0]])
        if potential(initial[:m]) < energy:
            initial = sphere_projection(initial, metric, potential, energy)
    H = Quantity("H", lambda z: mechanical_hamiltonian(metric, potential, z))
    return SystemBundle(name, model, metric, potential, float(energy), np.asarray(initial, float),
                        (H,), {}, sample_base)


def oscillator(m: int = 2, energy: float = 1.0) -> SystemBundle:
    V = Potential(m, lambda q: 0.5 * float(q @ q), lambda q: np.array(q, dtype=float), name="1/2|q|^2")
    z0 = np.concatenate([np.eye(m)[0], np.eye(m)[min(1, m - 1)]])

    def solution(t, z0=z0):
        # q(t) = A sin t + B cos t with B = q(0), A = p(0)
        q0, p0 = z0[:m], z0[m:]
        t = np.atleast_1d(t)[:, None]
        return np.hstack([q0 * np.cos(t) + p0 * np.sin(t), -q0 * np.sin(t) + p0 * np.cos(t)])

    b = canonical_cotangent(m, V, name="oscillator", energy=energy, initial=z0)
    ref = {
        "solution": Reference(solution, "classical oscillator: A sin t + B cos t"),
        "period": Reference(2 * np.pi, "all trajectories periodic"),
    }
    return SystemBundle(b.name, b.model, b.metric, V, b.energy, z0, b.quantities, ref)


def hyperbolic_metric() -> MetricModel:
    """Cometric of (dx^2 + dy^2)/y^2 on the upper half-plane."""
    def cometric(q):
        return q[1] ** 2 * np.eye(2)

    def partials(q):
        d = np.zeros((2, 2, 2))
        d[1] = 2.0 * q[1] * np.eye(2)
        return d

    return MetricModel(2, cometric, partials, domain=lambda q: q[1] > 0, name="hyperbolic")


def hyperbolic_plane(potential: Potential | None = None, energy=0.5) -> SystemBundle:
    metric = hyperbolic_metric()
    V = potential if potential is not None else Potential.zero(2)
    z0 = np.array([0.0, 1.0, 0.0, 1.0])
    if V(z0[:2]) < energy:
        z0 = sphere_projection(z0, metric, V, energy)

    def sample(rng):
        return np.array([rng.uniform(-1, 1), rng.uniform(0.5, 2.0)])

    b = canonical_cotangent(2, V, metric, name="hyperbolic", energy=energy, initial=z0,
                            domain=lambda q: bool(q[1] > 0), sample_base=sample)
    ref = {"curvature": Reference(-1.0, "constant curvature of the half-plane metric")}
    return SystemBundle(b.name, b.model, metric, V, b.energy, z0, b.quantities, ref, sample)


def _moments(I):
    I = np.asarray(I, dtype=float).reshape(-1)
    if I.shape != (3,) or np.any(~(I > 0)):
        raise ConfigError(f"moments of inertia must be three positive numbers, got {I}")
    return I


def so3_structure(perturb=None):
    """C[a, b, c] = C^c_ab for [e1,e2]=e3 and cyclic; ``perturb`` = (a, b, c, delta)."""
    C = np.array(LEVI_CIVITA)
    if perturb is not None:
        a, b, c, delta = perturb
        C[int(a), int(b), int(c)] += delta
        C[int(b), int(a), int(c)] -= delta
    C.setflags(write=False)
    return C


def so3_rigid_body(I=(1.0, 2.0, 3.0), perturb=None, initial_y=(0.3, 0.4, 0.5)) -> SystemBundle:
    I = _moments(I)
    C = so3_structure(perturb)
    model = AlgebroidModel.constant(np.zeros((0, 3)), C, name="rigid-body")
    metric = MetricModel.constant(np.diag(1.0 / I), name="inertia")
    V = Potential.zero(0)
    z0 = sphere_projection(np.asarray(initial_y, float), metric, V, 0.5)
    quantities = (
        Quantity("H", lambda z: 0.5 * float(z @ metric(z[:0]) @ z)),
        Quantity("casimir_y2", lambda z: float(z @ z)),
    )
    ref = {
        "sphere": Reference("y1^2/I1 + y2^2/I2 + y3^2/I3 = 1", "rigid body sphere bundle"),
    }
    return SystemBundle("rigid-body", model, metric, V, 0.5, z0, quantities, ref,
                        params={"I": I.tolist()})


def _unit_sphere_sample(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def heavy_top(I=(1.0, 2.0, 3.0), mass=1.0, gravity=1.0, length=1.0, a=(0.0, 0.0, 1.0),
              energy=None, initial=None) -> SystemBundle:
    """S^2 x so(3)* with rho(e_a) = q x e_a and V(q) = mgl (q . a)."""
    I = _moments(I)
    a = np.asarray(a, dtype=float)
    if a.shape != (3,) or abs(np.linalg.norm(a) - 1.0) > 1e-12:
        raise ConfigError("a must be a unit 3-vector")
    mgl = float(mass * gravity * length)
    if not mgl > 0:
        raise ConfigError("m g l must be positive")

    def anchor(q):
        # rho^i_a = -eps_{i a k} q^k, the cross-product matrix of q
        return np.array([[0.0, -q[2], q[1]], [q[2], 0.0, -q[0]], [-q[1], q[0], 0.0]])

    model = AlgebroidModel(3, 3, anchor, lambda q: LEVI_CIVITA,
                           domain=lambda q: abs(float(q @ q) - 1.0) < 1e-9, name="heavy-top")
    metric = MetricModel.constant(np.diag(1.0 / I), name="inertia")
    V = Potential(3, lambda q: mgl * float(q @ a), lambda q: mgl * a, name="mgl q.a")
    e = 2.0 * mgl if energy is None else float(energy)
    if initial is None:
        q0 = np.array([np.sin(0.5), 0.0, np.cos(0.5)])
        initial = np.concatenate([q0, [0.3, 0.4, 0.5]])
    z0 = sphere_projection(np.asarray(initial, float), metric, V, e)
    quantities = (
        Quantity("H", lambda z: mechanical_hamiltonian(metric, V, z)),
        Quantity("casimir_qq", lambda z: float(z[:3] @ z[:3])),
        Quantity("q_dot_y", lambda z: float(z[:3] @ z[3:])),
    )
    ref = {"V(a)": Reference(mgl, "V(q) = mgl q.a")}
    return SystemBundle("heavy-top", model, metric, V, e, z0, quantities, ref, _unit_sphere_sample,
                        params={"I": I.tolist(), "mgl": mgl, "a": a.tolist()})


def pendulum_potential(strength=0.5):
    """V(psi) = k (1 - cos(sqrt(2) psi)), the hinge-angle potential in the psi chart."""
    r2 = np.sqrt(2.0)
    return Potential(1, lambda q: strength * (1.0 - np.cos(r2 * q[0])),
                     lambda q: np.array([strength * r2 * np.sin(r2 * q[0])]),
                     name=f"{strength}(1-cos(sqrt2 psi))")


def coupled_pendula(potential: Potential | None = None, energy=2.0) -> SystemBundle:
    """T*S^1 x R with coordinates (psi, p_psi, y); y is central."""
    V = potential if potential is not None else pendulum_potential()
    model = AlgebroidModel.constant([[1.0, 0.0]], np.zeros((2, 2, 2)), name="pendula")
    metric = MetricModel.identity(2)
    z0 = sphere_projection(np.array([0.3, 0.5, 0.4]), metric, V, energy)
    quantities = (
        Quantity("H", lambda z: mechanical_hamiltonian(metric, V, z)),
        Quantity("y", lambda z: float(z[2])),
    )

    def sample(rng):
        return np.array([rng.uniform(-np.pi, np.pi)])

    return SystemBundle("pendula", model, metric, V, float(energy), z0, quantities, {}, sample)


def cotangent_custom(m=1, cometric=None, stiffness=None, energy=0.5) -> SystemBundle:
    """Canonical T*R^m with a constant cometric and V = 1/2 sum k_i q_i^2."""
    m = int(m)
    G = np.diag(np.ones(m)) if cometric is None else np.array(cometric, dtype=float)
    if G.ndim == 1:
        G = np.diag(G)
    if G.shape != (m, m):
        raise ConfigError(f"cometric must be {m}x{m}")
    metric = MetricModel.constant(G, name="custom")
    if not metric.is_positive_definite(np.zeros(m)):
        raise ConfigError("cometric must be symmetric positive definite")
    k = np.zeros(m) if stiffness is None else np.broadcast_to(np.asarray(stiffness, float), (m,)).copy()
    V = Potential(m, lambda q: 0.5 * float(k @ (q * q)), lambda q: k * q, name="quadratic")
    if not np.any(k):
        V = Potential.zero(m)
    return canonical_cotangent(m, V, metric, name="cotangent-custom", energy=energy)


def gaussian_curvature_oracle(metric: MetricModel, q, h=1e-4) -> float:
    """Curvature of a metric conformal to the flat one, e^{2 phi}(dx^2 + dy^2).

    The cometric must be c(q) * identity; then phi = -1/2 ln c and
    K = -e^{-2 phi} (phi_xx + phi_yy), with the Laplacian by central differences.
    """
    q = np.asarray(q, dtype=float)
    if q.shape != (2,) or metric.fiber_dim != 2:
        raise ConfigError("curvature oracle needs a 2-dimensional base")
    G = metric(q)
    c = G[0, 0]
    if abs(G[0, 1]) > 1e-12 * abs(c) or abs(G[1, 0]) > 1e-12 * abs(c) or abs(G[1, 1] - c) > 1e-12 * abs(c):
        raise ConfigError("metric is not conformal to the flat metric in this chart")

    def phi(p):
        return -0.5 * np.log(metric(p)[0, 0])

    step = h * max(1.0, float(np.max(np.abs(q))))
    lap = 0.0
    for i in range(2):
        d = np.zeros(2)
        d[i] = step
        lap += (phi(q + d) - 2.0 * phi(q) + phi(q - d)) / step**2
    return -c * lap


def closed_form_curvature(q, laplacian_V=0.0) -> float:
    """Closed form 1/2 (-y^2 + y^4 Lap V) for the half-plane Jacobi metric; kept for comparison with the oracle."""
    y = float(q[1])
    return 0.5 * (-(y**2) + y**4 * laplacian_V)


def _heavy_top_from(params):
    kw = {}
    if "I" in params:
        kw["I"] = params["I"]
    if "mgl" in params:
        kw["mass"], kw["gravity"], kw["length"] = float(params["mgl"]), 1.0, 1.0
    for key, name in (("m", "mass"), ("g", "gravity"), ("l", "length")):
        if key in params:
            kw[name] = float(params[key])
    if "a" in params:
        kw["a"] = params["a"]
    return heavy_top(**kw)


SYSTEMS: dict[str, Callable[[dict], SystemBundle]] = {
    "oscillator": lambda p: oscillator(int(p.get("m", 2)), float(p.get("e", 1.0))),
    "hyperbolic": lambda p: hyperbolic_plane(),
    "rigid-body": lambda p: so3_rigid_body(p.get("I", (1.0, 2.0, 3.0)), p.get("perturb")),
    "heavy-top": _heavy_top_from,
    "pendula": lambda p: coupled_pendula(pendulum_potential(float(p.get("strength", 0.5)))),
    "cotangent-custom": lambda p: cotangent_custom(p.get("m", 1), p.get("cometric"), p.get("stiffness")),
}


def get_system(name: str, params: dict | None = None) -> SystemBundle:
    try:
        factory = SYSTEMS[name]
    except KeyError:
        raise ConfigError(f"unknown system {name!r}; choose from {sorted(SYSTEMS)}") from None
    return factory(dict(params or {}))
