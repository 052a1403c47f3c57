"""Linear Poisson structures on the dual of a vector bundle.

Coordinates on A* are packed as z = (q^1..q^m, y_1..y_n).  The structure
functions are stored as ``anchor(q)[i, a] = rho^i_a`` and
``structure(q)[a, b, c] = C^c_{ab}``, so that

    {q^i, y_a} = rho^i_a,   {y_a, y_b} = -C^c_{ab} y_c,   {q^i, q^j} = 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import calculus
from .calculus import ScalarField
from .errors import DomainError


def _always(q):
    return True


@dataclass(frozen=True)
class AlgebroidModel:
    base_dim: int
    fiber_dim: int
    anchor: Callable[[np.ndarray], np.ndarray]
    structure: Callable[[np.ndarray], np.ndarray]
    domain: Callable[[np.ndarray], bool] = _always
    name: str = ""

    def __post_init__(self):
        if self.base_dim < 0 or self.fiber_dim < 1:
            raise ValueError("need base_dim >= 0 and fiber_dim >= 1")

    @classmethod
    def constant(cls, anchor, structure, name="", domain=_always):
        """Model with q-independent rho and C."""
        rho = np.array(anchor, dtype=float)
        C = np.array(structure, dtype=float)
        n = C.shape[0]
        rho = rho.reshape(-1, n)
        rho.setflags(write=False)
        C.setflags(write=False)
        return cls(rho.shape[0], n, lambda q: rho, lambda q: C, domain, name)

    @property
    def dim(self):
        return self.base_dim + self.fiber_dim

    def split(self, z):
        z = np.asarray(z, dtype=float)
        return z[: self.base_dim], z[self.base_dim:]

    def check(self, z):
        q = np.asarray(z, dtype=float)[: self.base_dim]
        if not self.domain(q):
            raise DomainError(f"{self.name or 'model'}: q={q} outside the chart domain")

    def with_structure(self, structure, name=None):
        return AlgebroidModel(self.base_dim, self.fiber_dim, self.anchor, structure,
                              self.domain, name or self.name)


@dataclass(frozen=True)
class PhasePoint:
    q: np.ndarray
    y: np.ndarray

    @classmethod
    def from_array(cls, z, base_dim):
        z = np.asarray(z, dtype=float)
        return cls(z[:base_dim].copy(), z[base_dim:].copy())

    def __array__(self, dtype=None, copy=None):
        return np.concatenate([self.q, self.y]).astype(dtype or float)

    @property
    def array(self):
        return np.concatenate([np.asarray(self.q, float), np.asarray(self.y, float)])


@dataclass(frozen=True)
class Section:
    """Section of A given by its frame coefficients X^a(q).

    ``jacobian(q)[a, i] = dX^a/dq^i``; central differences when omitted.
    """
    components: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = field(default="", compare=False)

    def __call__(self, q):
        return np.asarray(self.components(np.asarray(q, dtype=float)), dtype=float)

    def derivative(self, q, h=None):
        q = np.asarray(q, dtype=float)
        if q.size == 0:
            return np.zeros((self(q).size, 0))
        if self.jacobian is not None:
            return np.asarray(self.jacobian(q), dtype=float).reshape(-1, q.size)
        return calculus.partials(self, q, h).T

    @classmethod
    def constant(cls, v):
        v = np.asarray(v, dtype=float)
        return cls(lambda q: v, lambda q: np.zeros((v.size, np.size(q))))


def _packed(z):
    if isinstance(z, PhasePoint):
        return z.array
    return np.asarray(z, dtype=float)


def poisson_matrix(model: AlgebroidModel, z) -> np.ndarray:
    """Pi(z) without the domain check; used inside finite differences."""
    m, n = model.base_dim, model.fiber_dim
    z = _packed(z)
    q, y = z[:m], z[m:]
    P = np.zeros((m + n, m + n))
    rho = np.asarray(model.anchor(q), dtype=float).reshape(m, n)
    C = np.asarray(model.structure(q), dtype=float)
    P[:m, m:] = rho
    P[m:, :m] = -rho.T
    Y = C @ y
    P[m:, m:] = -0.5 * (Y - Y.T)
    return P


def assemble_poisson_matrix(model: AlgebroidModel, z) -> np.ndarray:
    z = _packed(z)
    model.check(z)
    return poisson_matrix(model, z)


def poisson_bracket(F, G, model: AlgebroidModel, z, h=None) -> float:
    """{F, G}(z) = dF^T Pi dG."""
    z = _packed(z)
    P = assemble_poisson_matrix(model, z)
    return float(calculus.gradient(F, z, h) @ P @ calculus.gradient(G, z, h))


def hat(X: Section, z, base_dim: int) -> float:
    """Fiberwise linear function of a section: sum_a X^a(q) y_a."""
    z = _packed(z)
    return float(X(z[:base_dim]) @ z[base_dim:])


def hat_field(X: Section, base_dim: int, h=None) -> ScalarField:
    def value(z):
        return hat(X, z, base_dim)

    def grad(z):
        q, y = z[:base_dim], z[base_dim:]
        return np.concatenate([X.derivative(q, h).T @ y, X(q)])

    return ScalarField(value, grad, name=f"hat({X.name})")


def base_field(f: Callable[[np.ndarray], float], base_dim: int,
               grad: Callable[[np.ndarray], np.ndarray] | None = None) -> ScalarField:
    """The pullback f o tau to A*."""
    def value(z):
        return float(f(z[:base_dim]))

    full_grad = None
    if grad is not None:
        def full_grad(z):
            out = np.zeros(z.size)
            out[:base_dim] = grad(z[:base_dim])
            return out

    return ScalarField(value, full_grad)


def anchor_action(model: AlgebroidModel, X: Section, q) -> np.ndarray:
    """Components of the base vector field rho(X) at q."""
    q = np.asarray(q, dtype=float)
    rho = np.asarray(model.anchor(q), dtype=float).reshape(model.base_dim, model.fiber_dim)
    return rho @ X(q)


def algebroid_bracket(X: Section, Y: Section, model: AlgebroidModel, q, h=None) -> np.ndarray:
    """[[X, Y]]^c = X^a Y^b C^c_ab + rho(X)(Y^c) - rho(Y)(X^c)."""
    q = np.asarray(q, dtype=float)
    model.check(q)
    C = np.asarray(model.structure(q), dtype=float)
    Xq, Yq = X(q), Y(q)
    out = np.einsum("abc,a,b->c", C, Xq, Yq)
    if model.base_dim:
        out = out + Y.derivative(q, h) @ anchor_action(model, X, q)
        out = out - X.derivative(q, h) @ anchor_action(model, Y, q)
    return out


def liouville_field(z, base_dim: int) -> np.ndarray:
    z = _packed(z)
    out = z.copy()
    out[:base_dim] = 0.0
    return out
