"""Jacobi pairs built from a linear Poisson structure and a bundle metric.

On A*:            L = Pi + Delta ^ X_kappa,                E = -X_kappa
On H^{-1}(e):     L = Pi + Delta ^ X_H / (2(e - V)),       E = -X_H / (2(e - V))

with (Delta ^ X)^{ab} = Delta^a X^b - Delta^b X^a.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import calculus
from .algebroid import AlgebroidModel, _packed, liouville_field, poisson_matrix
from .calculus import ScalarField
from .dynamics import (
    MetricModel,
    Potential,
    hamiltonian_field,
    jacobi_metric,
    kinetic_field,
)
from .errors import DegenerateFiberError, EnergyDomainError

MEMBERSHIP_TOL = 1e-9


def _wedge(u, v):
    return np.outer(u, v) - np.outer(v, u)


@dataclass(frozen=True)
class JacobiPair:
    """Ambient fields (L, E); with ``energy`` set they are the sphere-bundle pair."""
    model: AlgebroidModel
    metric: MetricModel
    potential: Potential | None = None
    energy: float | None = None
    fd_step: float | None = None

    @property
    def on_energy_level(self):
        return self.energy is not None

    @property
    def kinetic_metric(self) -> MetricModel:
        """Metric whose kinetic energy the pair is built from (g, or g_e on H = e)."""
        if self.on_energy_level:
            return jacobi_metric(self.metric, self._potential, self.energy)
        return self.metric

    @property
    def _potential(self):
        return self.potential if self.potential is not None else Potential.zero(self.model.base_dim)

    def _driver(self, z):
        """(scale, X) with E = -scale X and L = Pi + scale Delta ^ X."""
        m = self.model.base_dim
        P = poisson_matrix(self.model, z)
        if not self.on_energy_level:
            X = P @ kinetic_field(self.metric, self.fd_step).grad(z)
            return 1.0, X, P
        V = self._potential(z[:m])
        gap = self.energy - V
        if not gap > 0:
            raise EnergyDomainError(f"V(q) = {V} >= e = {self.energy}")
        X = P @ hamiltonian_field(self.metric, self._potential, self.fd_step).grad(z)
        return 1.0 / (2.0 * gap), X, P

    def bivector(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        scale, X, P = self._driver(z)
        return P + scale * _wedge(liouville_field(z, self.model.base_dim), X)

    def reeb(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        scale, X, _ = self._driver(z)
        return -scale * X

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        scale, X, P = self._driver(z)
        L = P + scale * _wedge(liouville_field(z, self.model.base_dim), X)
        return L, -scale * X

    def residuals(self, z, h=None):
        return calculus.jacobi_residuals(self.bivector, self.reeb, z, h)

    def bracket(self, f1, f2, z, h=None) -> float:
        """Jacobi bracket L(df1, df2) + f1 E(f2) - f2 E(f1)."""
        z = np.asarray(z, dtype=float)
        L, E = self(z)
        g1 = calculus.gradient(f1, z, h)
        g2 = calculus.gradient(f2, z, h)
        return float(g1 @ L @ g2 + f1(z) * (E @ g2) - f2(z) * (E @ g1))


def jacobi_pair(model: AlgebroidModel, metric: MetricModel, z):
    z = _packed(z)
    model.check(z)
    return JacobiPair(model, metric)(z)


def energy_jacobi_pair(model: AlgebroidModel, metric: MetricModel, potential: Potential, e, z):
    z = _packed(z)
    model.check(z)
    return JacobiPair(model, metric, potential, float(e))(z)


def sphere_membership(z, metric: MetricModel, potential: Potential | None = None, e=0.5) -> float:
    """|g^{ab} y_a y_b - 2(e - V(q))|, which equals 2|H - e|."""
    z = _packed(z)
    m = metric.base_dim_of(z)
    q, y = z[:m], z[m:]
    V = 0.0 if potential is None else potential(q)
    return abs(float(y @ metric(q) @ y) - 2.0 * (e - V))


@dataclass(frozen=True)
class SphereBundlePoint:
    z: np.ndarray
    residual: float

    @classmethod
    def build(cls, z, metric, potential=None, e=0.5, tol=MEMBERSHIP_TOL):
        z = _packed(z)
        r = sphere_membership(z, metric, potential, e)
        if r >= tol:
            raise ValueError(f"point is off the sphere bundle (residual {r:.3e})")
        return cls(z, r)


def restricted_bracket(G1, G2, pair: JacobiPair, z, h=None) -> tuple[float, float]:
    """The restricted Jacobi bracket computed two ways.

    A: L(dG1, dG2) + G1 E(G2) - G2 E(G1)
    B: {G1,G2} + X_k(G1) (G2 - Delta G2) - X_k(G2) (G1 - Delta G1),
       with X_k(G) = {G, k} for the kinetic energy k of ``pair``.
    """
    z = np.asarray(z, dtype=float)
    pair.model.check(z)
    way_a = pair.bracket(G1, G2, z, h)

    m = pair.model.base_dim
    P = poisson_matrix(pair.model, z)
    kappa = kinetic_field(pair.kinetic_metric, pair.fd_step)
    gk = kappa.grad(z)
    g1 = calculus.gradient(G1, z, h)
    g2 = calculus.gradient(G2, z, h)
    D = liouville_field(z, m)
    x1 = g1 @ P @ gk
    x2 = g2 @ P @ gk
    way_b = float(g1 @ P @ g2 + x1 * (G2(z) - D @ g2) - x2 * (G1(z) - D @ g1))
    return way_a, way_b


def poissonization_map(beta, t, base_dim):
    """Psi(beta, t) = e^t beta (fiber scaling)."""
    out = np.array(beta, dtype=float)
    out[base_dim:] *= np.exp(t)
    return out


def poissonization_check(F, G, beta, t, pair: JacobiPair, h=None) -> tuple[float, float]:
    """Both sides of the Poisson-map property of Psi at (beta, t).

    lhs = {F, G}(Psi(beta, t)); rhs is the bracket of F o Psi and G o Psi under
    e^{-t}(L - E ^ d/dt), assembled as an (N+1)x(N+1) matrix in (z, t).
    """
    if isinstance(beta, SphereBundlePoint):
        beta = beta.z
    beta = np.asarray(beta, dtype=float)
    m = pair.model.base_dim
    if not np.any(beta[m:]):
        raise DegenerateFiberError("beta lies on the zero section")
    pair.model.check(beta)

    z = poissonization_map(beta, t, m)
    P = poisson_matrix(pair.model, z)
    lhs = float(calculus.gradient(F, z, h) @ P @ calculus.gradient(G, z, h))

    L, E = pair(beta)
    N = beta.size
    ext = np.zeros((N + 1, N + 1))
    ext[:N, :N] = L
    ext[:N, N] = -E
    ext[N, :N] = E
    ext *= np.exp(-t)

    def pulled_gradient(f):
        if getattr(f, "grad", None) is not None:
            g = calculus.gradient(f, z)
            scale = np.ones(N)
            scale[m:] = np.exp(t)
            return np.append(g * scale, g[m:] @ z[m:])
        w = np.append(beta, t)
        return calculus.fd_gradient(lambda w: f(poissonization_map(w[:N], w[N], m)), w, h)

    return lhs, float(pulled_gradient(F) @ ext @ pulled_gradient(G))
