"""Kinetic and mechanical Hamiltonians, their vector fields, and integration.

Hamiltonian vector fields use X_F^a = Pi^{ab} d_b F, so that along the flow
dq^i/ds = rho^i_a g^{ab} y_b for a mechanical Hamiltonian.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson, solve_ivp
from scipy.interpolate import CubicHermiteSpline

from . import calculus
from .algebroid import AlgebroidModel, poisson_matrix, _packed
from .calculus import ScalarField
from .errors import DegenerateFiberError, DomainError, EnergyDomainError


def _always(q):
    return True


@dataclass(frozen=True)
class MetricModel:
    """Cometric g^{ab}(q) on the fibers of A*.

    ``partials(q)[i, a, b] = d g^{ab} / d q^i``; central differences when omitted.
    """
    fiber_dim: int
    cometric: Callable[[np.ndarray], np.ndarray]
    partials: Callable[[np.ndarray], np.ndarray] | None = None
    domain: Callable[[np.ndarray], bool] = _always
    name: str = ""

    @classmethod
    def constant(cls, matrix, name=""):
        G = np.array(matrix, dtype=float)
        G.setflags(write=False)
        return cls(G.shape[0], lambda q: G, lambda q: np.zeros((np.size(q),) + G.shape), name=name)

    @classmethod
    def identity(cls, n):
        return cls.constant(np.eye(n), name="identity")

    def __call__(self, q):
        return np.asarray(self.cometric(np.asarray(q, dtype=float)), dtype=float)

    def derivatives(self, q, h=None):
        q = np.asarray(q, dtype=float)
        if self.partials is not None:
            return np.asarray(self.partials(q), dtype=float).reshape(q.size, self.fiber_dim, self.fiber_dim)
        if q.size == 0:
            return np.zeros((0, self.fiber_dim, self.fiber_dim))
        return calculus.partials(self, q, h)

    def is_positive_definite(self, q) -> bool:
        G = self(q)
        if not np.allclose(G, G.T, rtol=0, atol=1e-12 * max(1.0, np.abs(G).max())):
            return False
        try:
            np.linalg.cholesky(G)
        except np.linalg.LinAlgError:
            return False
        return True

    def base_dim_of(self, z):
        return np.size(z) - self.fiber_dim

    def check(self, q):
        if not self.domain(np.asarray(q, dtype=float)):
            raise DomainError(f"{self.name or 'metric'}: q={q} outside the domain")


@dataclass(frozen=True)
class Potential:
    base_dim: int
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = ""

    @classmethod
    def zero(cls, base_dim):
        return cls.constant(base_dim, 0.0)

    @classmethod
    def constant(cls, base_dim, v):
        return cls(base_dim, lambda q: float(v), lambda q: np.zeros(base_dim), name=f"const({v})")

    def __call__(self, q):
        return float(self.value(np.asarray(q, dtype=float)))

    def grad(self, q, h=None):
        q = np.asarray(q, dtype=float)
        if self.gradient is not None:
            return np.asarray(self.gradient(q), dtype=float)
        if q.size == 0:
            return np.zeros(0)
        return calculus.fd_gradient(self, q, h)

    @property
    def is_constant(self):
        return self.name.startswith("const(")


@dataclass(frozen=True)
class EnergyLevel:
    e: float

    def admits(self, potential: Potential, q) -> bool:
        return potential(q) < self.e


def _split(metric, z):
    z = _packed(z)
    m = metric.base_dim_of(z)
    return z, z[:m], z[m:]


def kinetic_energy(metric: MetricModel, z) -> float:
    """1/2 g^{ab}(q) y_a y_b."""
    z, q, y = _split(metric, z)
    metric.check(q)
    return 0.5 * float(y @ metric(q) @ y)


def kinetic_gradient(metric: MetricModel, z, h=None) -> np.ndarray:
    z, q, y = _split(metric, z)
    dG = metric.derivatives(q, h)
    dq = 0.5 * (dG @ y @ y) if dG.size else np.zeros(q.size)
    return np.concatenate([dq, metric(q) @ y])


def mechanical_hamiltonian(metric: MetricModel, potential: Potential, z) -> float:
    z, q, _ = _split(metric, z)
    return kinetic_energy(metric, z) + potential(q)


def kinetic_field(metric: MetricModel, h=None) -> ScalarField:
    """kappa as a scalar field with its exact gradient."""
    def value(z):
        z, q, y = _split(metric, z)
        return 0.5 * float(y @ metric(q) @ y)

    return ScalarField(value, lambda z: kinetic_gradient(metric, z, h), name="kappa")


def hamiltonian_field(metric: MetricModel, potential: Potential, h=None) -> ScalarField:
    kappa = kinetic_field(metric, h)

    def value(z):
        m = metric.base_dim_of(z)
        return kappa(z) + potential(z[:m])

    def grad(z):
        m = metric.base_dim_of(z)
        g = kinetic_gradient(metric, z, h)
        g[:m] += potential.grad(z[:m], h)
        return g

    return ScalarField(value, grad, name="H")


def hamiltonian_vector_field(F, model: AlgebroidModel, z, h=None) -> np.ndarray:
    """X_F(z) = Pi(z) dF(z)."""
    z = _packed(z)
    model.check(z)
    return poisson_matrix(model, z) @ calculus.gradient(F, z, h)


def hamiltonian_flow(F, model: AlgebroidModel, h=None):
    """z -> X_F(z) without domain checks, for integrators and finite differences."""
    def X(z):
        z = np.asarray(z, dtype=float)
        return poisson_matrix(model, z) @ calculus.gradient(F, z, h)
    return X


def jacobi_metric(metric: MetricModel, potential: Potential, e: float) -> MetricModel:
    """Cometric of g_e = 2(e - V) g, i.e. g^{ab} / (2(e - V))."""
    e = float(getattr(e, "e", e))

    def factor(q):
        gap = e - potential(q)
        if not gap > 0:
            raise EnergyDomainError(f"V(q) = {potential(q)} >= e = {e} at q={q}")
        return 1.0 / (2.0 * gap)

    def cometric(q):
        return metric(q) * factor(q)

    def partials(q):
        f = factor(q)
        dG = metric.derivatives(q)
        dV = potential.grad(q)
        # d/dq^i [g / (2(e - V))] = dg f + g dV 2 f^2
        return dG * f + np.einsum("i,ab->iab", dV, metric(q)) * (2.0 * f * f)

    def domain(q):
        return metric.domain(q) and potential(q) < e

    return MetricModel(metric.fiber_dim, cometric, partials, domain,
                       name=f"jacobi({metric.name}, e={e})")


@dataclass
class Trajectory:
    s: np.ndarray
    z: np.ndarray
    base_dim: int
    H: np.ndarray | None = None
    quantities: dict[str, np.ndarray] = field(default_factory=dict)
    exit_reason: str = "completed"

    @property
    def q(self):
        return self.z[:, : self.base_dim]

    @property
    def y(self):
        return self.z[:, self.base_dim:]

    def __len__(self):
        return len(self.s)

    @property
    def truncated(self):
        return self.exit_reason != "completed"


def _rk4_step(f, z, dt):
    k1 = f(z)
    k2 = f(z + 0.5 * dt * k1)
    k3 = f(z + 0.5 * dt * k2)
    k4 = f(z + dt * k3)
    return z + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _finish(s, zs, base_dim, hamiltonian, conserved, exit_reason):
    s = np.asarray(s, dtype=float)
    Z = np.asarray(zs, dtype=float).reshape(len(s), -1)
    H = None if hamiltonian is None else np.array([hamiltonian(z) for z in Z])
    quantities = {name: np.array([fn(z) for z in Z]) for name, fn in (conserved or {}).items()}
    return Trajectory(s, Z, base_dim, H, quantities, exit_reason)


def integrate(field, z0, t_span, method="rk4", step=1e-3, *, base_dim=0,
              hamiltonian=None, conserved=None, stride=1, guard=None, project=None,
              abs_tol=1e-10, rel_tol=1e-9, max_step=0.1) -> Trajectory:
    """Integrate dz/ds = field(z) over ``t_span``.

    ``guard(z)`` returns a margin that must stay positive; reaching zero (or a
    DomainError from ``field``) ends the run with ``exit_reason`` set.
    ``project`` is applied after every rk4 step when given.
    """
    t0, t1 = map(float, t_span)
    z0 = np.asarray(z0, dtype=float)
    if t1 < t0:
        raise ValueError("t_span must be increasing")
    if t1 == t0:
        return _finish([t0], [z0], base_dim, hamiltonian, conserved, "completed")

    if method == "rk4":
        n_steps = int(np.ceil((t1 - t0) / step - 1e-9))
        ts = [t0]
        zs = [z0]
        z = z0
        reason = "completed"
        for k in range(1, n_steps + 1):
            t_prev = t0 + (k - 1) * step
            dt = min(step, t1 - t_prev)
            try:
                z_new = _rk4_step(field, z, dt)
            except DomainError:
                reason = "domain"
                break
            if not np.all(np.isfinite(z_new)):
                reason = "domain"
                break
            if guard is not None and not guard(z_new) > 0:
                reason = "boundary"
                break
            z = project(z_new) if project is not None else z_new
            if k % stride == 0 or k == n_steps:
                ts.append(t_prev + dt if k < n_steps else t1)
                zs.append(z)
        if reason != "completed" and (not ts or ts[-1] != t_prev):
            ts.append(t_prev)
            zs.append(z)
        return _finish(ts, zs, base_dim, hamiltonian, conserved, reason)

    if method == "rk45":
        grid_dt = step * stride
        t_eval = np.append(np.arange(t0, t1, grid_dt), t1)
        events = None
        if guard is not None:
            def boundary(t, z):
                return guard(z)
            boundary.terminal = True
            events = [boundary]
        try:
            sol = solve_ivp(lambda t, z: field(z), (t0, t1), z0, method="RK45",
                            t_eval=t_eval, rtol=rel_tol, atol=abs_tol,
                            first_step=step, max_step=max_step, events=events)
        except DomainError:
            return _finish([t0], [z0], base_dim, hamiltonian, conserved, "domain")
        reason = "completed" if sol.status == 0 else ("boundary" if sol.status == 1 else "domain")
        return _finish(sol.t, sol.y.T, base_dim, hamiltonian, conserved, reason)

    raise ValueError(f"unknown integration method {method!r}")


def energy_guard(potential: Potential, e: float, base_dim: int):
    def margin(z):
        return e - potential(z[:base_dim])
    return margin


def reparametrization_rate(trajectory: Trajectory, potential: Potential, e: float) -> np.ndarray:
    rate = np.array([2.0 * (e - potential(q)) for q in trajectory.q])
    if np.any(rate <= 0):
        raise EnergyDomainError("trajectory leaves U_e = {V < e}")
    return rate


@dataclass
class Reparametrization:
    s: np.ndarray
    h: np.ndarray
    c: np.ndarray
    c_e: np.ndarray
    gap: float
    increasing: bool


def reparametrize(c: Trajectory, model: AlgebroidModel, metric: MetricModel,
                  potential: Potential, e: float, step=None) -> Reparametrization:
    """Compare a trajectory of X_H with the Jacobi-metric kinetic flow.

    h solves dh/ds = 2(e - V(c(s))), h(0) = 0 (cumulative Simpson on the samples
    of ``c``).  The kinetic trajectory c_e is integrated independently in its own
    time from c(0) and evaluated at h(s) by cubic Hermite interpolation.
    """
    rate = reparametrization_rate(c, potential, e)
    s = c.s - c.s[0]
    h = cumulative_simpson(rate, x=s, initial=0.0) if len(s) > 2 else np.concatenate(
        [[0.0], np.cumsum(0.5 * (rate[1:] + rate[:-1]) * np.diff(s))])
    increasing = bool(np.all(np.diff(h) > 0))
    if len(s) == 1:
        return Reparametrization(s, h, c.z, c.z.copy(), 0.0, True)

    ge = jacobi_metric(metric, potential, e)
    Xe = hamiltonian_flow(kinetic_field(ge), model)
    dt = step if step is not None else float(np.min(np.diff(s)))
    h_end = float(h[-1])
    ce = integrate(Xe, c.z[0], (0.0, h_end + dt), "rk4", dt, base_dim=c.base_dim,
                   guard=energy_guard(potential, e, c.base_dim))
    if ce.truncated:
        raise EnergyDomainError(f"Jacobi-metric flow stopped early ({ce.exit_reason})")
    slopes = np.array([Xe(z) for z in ce.z])
    spline = CubicHermiteSpline(ce.s, ce.z, slopes, axis=0)
    ce_at_h = spline(h)
    gap = float(np.max(np.abs(ce_at_h - c.z)))
    return Reparametrization(s, h, c.z, ce_at_h, gap, increasing)


def sphere_projection(z, metric: MetricModel, potential: Potential | None = None, e=0.5):
    """Rescale y so that g^{ab} y_a y_b = 2(e - V(q))."""
    z, q, y = _split(metric, z)
    norm2 = float(y @ metric(q) @ y)
    if norm2 <= 0.0 or not np.any(y):
        raise DegenerateFiberError("cannot project the zero covector")
    V = 0.0 if potential is None else potential(q)
    if not V < e:
        raise EnergyDomainError(f"V(q) = {V} >= e = {e}")
    out = z.copy()
    out[q.size:] = y * np.sqrt(2.0 * (e - V) / norm2)
    return out
