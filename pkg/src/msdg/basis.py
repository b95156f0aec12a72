"""Local multiscale spaces ``E^p``, ``T^{2p-1}`` and plain polynomials.

Local basis ordering (``s = (x - x_j) / (width / 2)``, ``k = k_j``)::

    Ep(1)    e^{+ikx'}, e^{-ikx'}
    Ep(p)    e^{+ikx'}, e^{-ikx'}, 1, s, ..., s^{p-2}
    T2pm1(p) e^{+ikx'}, e^{-ikx'}, e^{+2ikx'}, e^{-2ikx'}, ..., e^{-pikx'}
    Poly(k)  1, s, ..., s^k

with ``x' = x - x_j``.  Monomials are centred and scaled; the span is the
same as with raw powers of ``x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

FAMILIES = ("Ep", "T2pm1", "Poly")
DEFAULT_PPW = 10.0


@dataclass(frozen=True)
class SpaceKind:
    family: str
    order: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown space family {self.family!r}")
        if int(self.order) != self.order or self.order < (0 if self.family == "Poly" else 1):
            raise ValueError(f"invalid order {self.order} for {self.family}")

    @property
    def dim(self) -> int:
        if self.family == "Ep":
            return 2 if self.order == 1 else self.order + 1
        if self.family == "T2pm1":
            return 2 * self.order
        return self.order + 1

    @property
    def n_exp(self) -> int:
        """Number of exponential members."""
        if self.family == "Ep":
            return 2
        if self.family == "T2pm1":
            return 2 * self.order
        return 0

    @property
    def n_poly(self) -> int:
        return self.dim - self.n_exp

    @property
    def frequencies(self) -> np.ndarray:
        """Multiples of ``k_j`` carried by the exponential members, signed."""
        if self.family == "Poly":
            return np.zeros(0)
        m = np.arange(1, self.n_exp // 2 + 1, dtype=float)
        return np.column_stack([m, -m]).ravel()

    @property
    def is_multiscale(self) -> bool:
        return self.family != "Poly"

    @property
    def label(self) -> str:
        if self.family == "Ep":
            return f"E{self.order}"
        if self.family == "T2pm1":
            return f"T{2 * self.order - 1}"
        return f"P{self.order}"

    @classmethod
    def parse(cls, label: str) -> "SpaceKind":
        """``"E2"`` -> Ep(2), ``"T5"`` -> T2pm1(3), ``"P3"`` -> Poly(3)."""
        label = label.strip()
        head, digits = label[:1].upper(), label[1:]
        if not digits.isdigit():
            raise ValueError(f"cannot parse space label {label!r}")
        n = int(digits)
        if head == "E":
            return cls("Ep", n)
        if head == "T":
            if n % 2 == 0:
                raise ValueError(f"T spaces have odd order, got {label!r}")
            return cls("T2pm1", (n + 1) // 2)
        if head == "P":
            return cls("Poly", n)
        raise ValueError(f"cannot parse space label {label!r}")

    def __str__(self):
        return self.label


def wave_number(f, x_j, eps: float):
    """Local wave number ``sqrt(f(x_j)) / eps``; accepts scalar or array ``x_j``."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    fx = np.asarray(f(np.asarray(x_j, dtype=float)), dtype=float)
    if np.any(~(fx > 0)):
        raise ValueError("f must be positive at every element midpoint")
    k = np.sqrt(fx) / eps
    return float(k) if k.ndim == 0 else k


def eval_members(kind: SpaceKind, k, center, half_width, x):
    """Values and first derivatives of all local basis members.

    ``k``, ``center`` and ``half_width`` have shape ``(E,)``; ``x`` has shape
    ``(E, Q)``.  Returns two complex arrays of shape ``(E, Q, dim)``.
    """
    k = np.asarray(k, dtype=float)[:, None]
    hw = np.asarray(half_width, dtype=float)[:, None]
    xs = np.asarray(x, dtype=float) - np.asarray(center, dtype=float)[:, None]
    shape = xs.shape + (kind.dim,)
    val = np.empty(shape, dtype=complex)
    der = np.empty(shape, dtype=complex)
    ne = kind.n_exp
    if ne:
        omega = k[..., None] * kind.frequencies
        e = np.exp(1j * omega * xs[..., None])
        val[..., :ne] = e
        der[..., :ne] = 1j * omega * e
    if kind.n_poly:
        s = xs / hw
        val[..., ne] = 1.0
        der[..., ne] = 0.0
        for n in range(1, kind.n_poly):
            val[..., ne + n] = s**n
            der[..., ne + n] = n * s ** (n - 1) / hw
    return val, der


@dataclass(frozen=True)
class ElementBasis:
    kind: SpaceKind
    k_j: float
    x_j: float
    half_width: float

    @property
    def dim(self) -> int:
        return self.kind.dim

    def _members(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return eval_members(self.kind, [self.k_j], [self.x_j], [self.half_width], x[None, :])

    def _check(self, m):
        if not 1 <= m <= self.dim:
            raise IndexError(f"basis index {m} outside 1..{self.dim}")

    def eval(self, m: int, x):
        """Value of the ``m``-th member (1-based) at ``x``."""
        self._check(m)
        val, _ = self._members(x)
        out = val[0, :, m - 1]
        return complex(out[0]) if np.ndim(x) == 0 else out

    def deriv(self, m: int, x):
        self._check(m)
        _, der = self._members(x)
        out = der[0, :, m - 1]
        return complex(out[0]) if np.ndim(x) == 0 else out


def element_basis(kind: SpaceKind, f, eps: float, left: float, right: float) -> ElementBasis:
    x_j = 0.5 * (left + right)
    k_j = wave_number(f, x_j, eps) if kind.is_multiscale else 0.0
    return ElementBasis(kind, k_j, x_j, 0.5 * (right - left))


def basis_eval(basis: ElementBasis, m: int, x):
    return basis.eval(m, x)


def basis_deriv(basis: ElementBasis, m: int, x):
    return basis.deriv(m, x)


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return self.nodes.size

    def integrate(self, values) -> complex:
        return np.sum(self.weights * np.asarray(values))


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Reference Gauss-Legendre rule on ``[-1, 1]`` (read-only arrays)."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def node_count(kind: SpaceKind, k_j, width, ppw: float = DEFAULT_PPW):
    """Oscillation-aware node count ``2 dim + 2 + ceil(ppw 2p k h / 2 pi)``.

    ``ppw`` counts nodes per wavelength of the fastest integrand: products of
    members carry frequencies up to ``2 p k_j``.  The polynomial floor is added
    rather than maxed, since elements a few wavelengths wide need both.
    """
    k_j = np.asarray(k_j, dtype=float)
    width = np.asarray(width, dtype=float)
    resolve = np.ceil(ppw * 2 * kind.order * k_j * width / (2.0 * math.pi))
    n = (2 * kind.dim + 2 + resolve).astype(int)
    return int(n) if n.ndim == 0 else n


def quadrature_rule(
    basis: ElementBasis, element_width: float, ppw: float = DEFAULT_PPW, refine: int = 1, extra: int = 0
) -> QuadratureRule:
    """Gauss-Legendre rule on the element, sized for the fastest member.

    ``refine`` multiplies and ``extra`` adds to the node count (the error
    quadrature uses ``refine=2``).
    """
    if not element_width > 0:
        raise ValueError("element width must be positive")
    n = refine * node_count(basis.kind, basis.k_j, element_width, ppw) + extra
    x, w = gauss_legendre(n)
    hw = 0.5 * element_width
    return QuadratureRule(basis.x_j + hw * x, hw * w)


def gram_matrix(basis: ElementBasis, element_width: float, ppw: float = DEFAULT_PPW) -> np.ndarray:
    """``G[m, n] = integral of phi_n * conj(phi_m)`` over the element."""
    rule = quadrature_rule(basis, element_width, ppw)
    val, _ = basis._members(rule.nodes)
    phi = val[0]
    return np.einsum("q,qm,qn->mn", rule.weights, phi.conj(), phi)
