"""Sparse direct solves and condition numbers of the global system."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

DENSE_LIMIT = 4000
AUTO_DENSE_LIMIT = 2000
METHODS = ("dense_2norm", "onenorm_estimate")


class SingularSystemError(RuntimeError):
    """Raised when a pivot of the LU factorization falls below tolerance."""

    def __init__(self, pivot_index: int, pivot: float, tol: float):
        super().__init__(f"numerically singular: |pivot[{pivot_index}]| = {pivot:.3e} <= {tol:.3e}")
        self.pivot_index = pivot_index
        self.pivot = pivot
        self.tol = tol


@dataclass(frozen=True)
class ConditionReport:
    value: float
    method: str
    dimension: int
    singular: bool = False


def _as_matrix(sys_or_matrix):
    return getattr(sys_or_matrix, "matrix", sys_or_matrix)


class Factorization:
    """Sparse LU (SuperLU, partial pivoting) with a small-pivot check.

    The singular flag uses ``|u_ii| <= n * machine_eps * ||A||_1``.
    """

    def __init__(self, matrix):
        A = sp.csc_matrix(matrix, dtype=complex)
        if A.shape[0] != A.shape[1]:
            raise ValueError("matrix must be square")
        self.n = A.shape[0]
        self.norm1 = float(abs(A).sum(axis=0).max()) if A.nnz else 0.0
        self.tol = self.n * np.finfo(float).eps * self.norm1
        self.lu = None
        self.pivot_index = None
        self.pivot = 0.0
        try:
            self.lu = spla.splu(A, permc_spec="COLAMD", diag_pivot_thresh=1.0)
        except RuntimeError:
            # SuperLU refuses exactly singular matrices without telling where
            self.pivot_index = -1
            return
        diag = np.abs(self.lu.U.diagonal())
        i = int(np.argmin(diag))
        if diag[i] <= self.tol:
            self.pivot_index = i
            self.pivot = float(diag[i])

    @property
    def singular(self) -> bool:
        return self.pivot_index is not None

    def check(self):
        if self.singular:
            raise SingularSystemError(self.pivot_index, self.pivot, self.tol)

    def solve(self, b, trans: str = "N"):
        self.check()
        return self.lu.solve(np.asarray(b, dtype=complex), trans=trans)


def solve(sys_or_matrix, rhs=None, factor: Factorization | None = None) -> np.ndarray:
    """Solve ``A x = rhs``; raises :class:`SingularSystemError` on tiny pivots."""
    A = _as_matrix(sys_or_matrix)
    if rhs is None:
        rhs = sys_or_matrix.rhs
    if factor is None:
        factor = Factorization(A)
    return factor.solve(rhs)


def _csign(z):
    a = np.abs(z)
    out = np.ones_like(z)
    nz = a > 0
    out[nz] = z[nz] / a[nz]
    return out


def hager_higham_inverse_norm1(apply_inv, apply_inv_h, n: int, max_iter: int = 5) -> float:
    """Estimate ``||A^{-1}||_1`` from solves with ``A`` and ``A^H``.

    Deterministic complex variant of Hager's method with Higham's refinements
    (the LAPACK ``zlacn2`` iteration plus its alternating-sign test vector).
    """
    if n == 1:
        return float(abs(apply_inv(np.ones(1, dtype=complex))[0]))
    x = np.full(n, 1.0 / n, dtype=complex)
    y = apply_inv(x)
    est = float(np.sum(np.abs(y)))
    z = apply_inv_h(_csign(y))
    j = int(np.argmax(np.abs(z)))
    for _ in range(1, max_iter):
        x = np.zeros(n, dtype=complex)
        x[j] = 1.0
        y = apply_inv(x)
        est_old, est = est, float(np.sum(np.abs(y)))
        if est <= est_old:
            est = est_old
            break
        z = apply_inv_h(_csign(y))
        j_last, j = j, int(np.argmax(np.abs(z)))
        if abs(z[j_last]) == abs(z[j]):
            break
    alt = (-1.0) ** np.arange(n) * (1.0 + np.arange(n) / (n - 1))
    temp = 2.0 * float(np.sum(np.abs(apply_inv(alt.astype(complex))))) / (3.0 * n)
    return max(est, temp)


def condition_estimate(sys_or_matrix, method: str = "auto", factor: Factorization | None = None) -> ConditionReport:
    """Condition number of the global matrix.

    ``auto`` uses the dense 2-norm ratio up to dimension 2000 and the 1-norm
    estimate above it.
    """
    A = _as_matrix(sys_or_matrix)
    n = A.shape[0]
    if method in ("auto", None):
        method = "dense_2norm" if n <= AUTO_DENSE_LIMIT else "onenorm_estimate"
    aliases = {"dense": "dense_2norm", "onenorm": "onenorm_estimate"}
    method = aliases.get(method, method)
    if method not in METHODS:
        raise ValueError(f"unknown condition method {method!r}")

    if method == "dense_2norm":
        if n > DENSE_LIMIT:
            raise ValueError(f"dense_2norm limited to dimension {DENSE_LIMIT}, got {n}")
        if factor is None:
            factor = Factorization(A)
        if factor.singular:
            return ConditionReport(math.inf, method, n, True)
        dense = A.toarray() if sp.issparse(A) else np.asarray(A)
        s = sla.svdvals(dense, check_finite=True)
        if s[-1] == 0.0 or not np.isfinite(s[0] / s[-1]):
            return ConditionReport(math.inf, method, n, True)
        return ConditionReport(float(s[0] / s[-1]), method, n, False)

    if factor is None:
        factor = Factorization(A)
    if factor.singular:
        return ConditionReport(math.inf, method, n, True)
    inv_norm = hager_higham_inverse_norm1(
        lambda v: factor.lu.solve(v), lambda v: factor.lu.solve(v, trans="H"), n
    )
    return ConditionReport(factor.norm1 * inv_norm, method, n, False)
