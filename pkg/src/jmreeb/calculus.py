"""Central-difference calculus on phase space.

Multivector components follow the convention P(df, dg) = sum_ab P^{ab} df_a dg_b
for bivectors and (L ^ E)^{abc} = L^{ab} E^c + L^{bc} E^a + L^{ca} E^b for the
wedge of a bivector with a vector.  The Schouten bracket of a bivector with
itself is

    [L, L]^{abc} = 2 sum_l (L^{la} d_l L^{bc} + L^{lb} d_l L^{ca} + L^{lc} d_l L^{ab})

With these conventions a Jacobi pair satisfies [L, L] = 2 L ^ E; no global sign
flip was needed (checked against every bundled model in the test suite).
"""
from __future__ import annotations

from itertools import combinations
from typing import Callable

import numpy as np

from .errors import DomainError

DEFAULT_STEP = 1e-5

ScalarFn = Callable[[np.ndarray], float]
VectorFn = Callable[[np.ndarray], np.ndarray]
BivectorFn = Callable[[np.ndarray], np.ndarray]


class ScalarField:
    """A scalar function of the packed phase point, optionally with an exact gradient."""

    def __init__(self, fn: ScalarFn, grad: VectorFn | None = None, name: str = ""):
        self.fn = fn
        self.grad = grad
        self.name = name

    def __call__(self, z):
        return self.fn(np.asarray(z, dtype=float))

    def __repr__(self):
        return f"ScalarField({self.name or self.fn!r})"


def step_for(z, h=None):
    """FD step scaled with the magnitude of ``z``."""
    base = DEFAULT_STEP if h is None else h
    return base * max(1.0, float(np.max(np.abs(z), initial=0.0)))


def partials(field, z, h=None):
    """Central-difference partials of an array-valued field.

    Returns ``D`` with ``D[l] = d field / d z_l``; shape ``(N,) + field(z).shape``.
    """
    z = np.asarray(z, dtype=float)
    step = step_for(z, h)
    out = []
    for l in range(z.size):
        zp = z.copy()
        zm = z.copy()
        zp[l] += step
        zm[l] -= step
        try:
            fp = np.asarray(field(zp), dtype=float)
            fm = np.asarray(field(zm), dtype=float)
        except DomainError:
            raise
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            raise DomainError(f"field evaluation failed near {z}: {exc}") from exc
        out.append((fp - fm) / (2.0 * step))
    if not out:
        shape = np.shape(field(z))
        return np.zeros((0,) + shape)
    return np.stack(out)


def fd_gradient(f, z, h=None):
    """Central-difference gradient of a scalar field, O(h^2)."""
    return partials(f, z, h)


def gradient(f, z, h=None):
    """Exact gradient when ``f`` carries one, else central differences."""
    grad = getattr(f, "grad", None)
    if grad is not None:
        return np.asarray(grad(np.asarray(z, dtype=float)), dtype=float)
    return fd_gradient(f, z, h)


def directional(f, v, z, h=None):
    """v(f) at z."""
    return float(gradient(f, z, h) @ np.asarray(v, dtype=float))


class TrivectorValue:
    """Totally antisymmetric 3-tensor stored on strictly increasing triples."""

    def __init__(self, dim: int, values: np.ndarray):
        self.dim = dim
        self.triples = list(combinations(range(dim), 3))
        self.values = np.asarray(values, dtype=float)
        if self.values.shape != (len(self.triples),):
            raise ValueError("one value per increasing triple expected")

    @classmethod
    def from_full(cls, T: np.ndarray) -> "TrivectorValue":
        dim = T.shape[0]
        vals = [T[a, b, c] for a, b, c in combinations(range(dim), 3)]
        return cls(dim, np.array(vals, dtype=float))

    def __getitem__(self, idx):
        a, b, c = idx
        if len({a, b, c}) < 3:
            return 0.0
        order = sorted((a, b, c))
        perm = [order.index(i) for i in (a, b, c)]
        inversions = sum(perm[i] > perm[j] for i in range(3) for j in range(i + 1, 3))
        sign = -1.0 if inversions % 2 else 1.0
        return sign * self.values[self.triples.index(tuple(order))]

    def to_full(self) -> np.ndarray:
        T = np.zeros((self.dim,) * 3)
        for (a, b, c), v in zip(self.triples, self.values):
            for (i, j, k), s in (((a, b, c), 1), ((b, c, a), 1), ((c, a, b), 1),
                                 ((b, a, c), -1), ((a, c, b), -1), ((c, b, a), -1)):
                T[i, j, k] = s * v
        return T

    def __sub__(self, other):
        return TrivectorValue(self.dim, self.values - other.values)

    def __add__(self, other):
        return TrivectorValue(self.dim, self.values + other.values)

    def __mul__(self, k):
        return TrivectorValue(self.dim, k * self.values)

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values), initial=0.0))


def schouten_bivector_self(Lam: BivectorFn, z, h=None) -> TrivectorValue:
    """[L, L] at z, derivatives by central differences."""
    L = np.asarray(Lam(np.asarray(z, dtype=float)), dtype=float)
    dL = partials(Lam, z, h)  # dL[l, b, c] = d_l L^{bc}
    T = (np.einsum("la,lbc->abc", L, dL)
         + np.einsum("lb,lca->abc", L, dL)
         + np.einsum("lc,lab->abc", L, dL))
    return TrivectorValue.from_full(2.0 * T)


def wedge_bivector_vector(L, E) -> TrivectorValue:
    L = np.asarray(L, dtype=float)
    E = np.asarray(E, dtype=float)
    T = (np.einsum("ab,c->abc", L, E)
         + np.einsum("bc,a->abc", L, E)
         + np.einsum("ca,b->abc", L, E))
    return TrivectorValue.from_full(T)


def lie_derivative_bivector(E: VectorFn, Lam: BivectorFn, z, h=None) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    Ez = np.asarray(E(z), dtype=float)
    L = np.asarray(Lam(z), dtype=float)
    dL = partials(Lam, z, h)
    dE = partials(E, z, h)  # dE[l, a] = d_l E^a
    out = (np.einsum("l,lab->ab", Ez, dL)
           - np.einsum("lb,la->ab", L, dE)
           - np.einsum("al,lb->ab", L, dE))
    return 0.5 * (out - out.T)


def vector_field_bracket(X: VectorFn, Y: VectorFn, z, h=None) -> np.ndarray:
    """[X, Y]^a = X^l d_l Y^a - Y^l d_l X^a."""
    z = np.asarray(z, dtype=float)
    return partials(Y, z, h).T @ X(z) - partials(X, z, h).T @ Y(z)


def jacobi_residuals(Lam: BivectorFn, E: VectorFn, z, h=None) -> tuple[float, float]:
    """Max-norms of [L, L] - 2 L ^ E and of L_E L at z."""
    z = np.asarray(z, dtype=float)
    S = schouten_bivector_self(Lam, z, h)
    W = wedge_bivector_vector(Lam(z), E(z))
    r1 = (S - 2.0 * W).max_abs()
    r2 = float(np.max(np.abs(lie_derivative_bivector(E, Lam, z, h)), initial=0.0))
    return r1, r2
