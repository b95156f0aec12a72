"""Global sparse system for the mixed DG weak form.

Unknowns are interleaved by element: the ``dim`` coefficients of ``u_h`` on
element ``j``, then the ``dim`` coefficients of ``q_h`` on element ``j``, then
element ``j + 1``.  Row ``2*dim*j + m`` holds the first equation tested with
member ``m``; row ``2*dim*j + dim + m`` holds the second equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .basis import DEFAULT_PPW, SpaceKind, eval_members, gauss_legendre, node_count, wave_number
from .coefficients import CoefficientField
from .mesh import MeshPartition
from .trace import TraceParams

U, Q = 0, 1


@dataclass(frozen=True)
class SolveConfig:
    mesh: MeshPartition
    space: SpaceKind
    eps: float
    f: CoefficientField
    params: TraceParams = field(default_factory=TraceParams)
    ppw: float = DEFAULT_PPW

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")


@dataclass(frozen=True)
class DofMap:
    N: int
    dim: int

    @property
    def size(self) -> int:
        return 2 * self.dim * self.N

    def index(self, j: int, var: int, m: int) -> int:
        """Global index for element ``j`` (0-based), variable U/Q, member ``m`` (0-based)."""
        if not (0 <= j < self.N and var in (U, Q) and 0 <= m < self.dim):
            raise IndexError((j, var, m))
        return (2 * j + var) * self.dim + m

    def split(self, vec) -> tuple[np.ndarray, np.ndarray]:
        """Per-element ``(u, q)`` coefficient arrays, each of shape ``(N, dim)``."""
        v = np.asarray(vec).reshape(self.N, 2, self.dim)
        return v[:, U, :], v[:, Q, :]

    def join(self, u, q) -> np.ndarray:
        return np.stack([np.asarray(u), np.asarray(q)], axis=1).reshape(-1)


@dataclass(frozen=True)
class ElementData:
    """Local integrals and endpoint values, all elements at once.

    ``mass[e, m, n]`` integrates ``phi_n conj(phi_m)``; ``stiff`` uses
    ``conj(phi_m')`` and ``fmass`` carries the extra factor ``f``.
    """

    k: np.ndarray
    center: np.ndarray
    half_width: np.ndarray
    n_quad: np.ndarray
    mass: np.ndarray
    stiff: np.ndarray
    fmass: np.ndarray
    phi_left: np.ndarray
    phi_right: np.ndarray


def element_wave_numbers(mesh: MeshPartition, space: SpaceKind, f, eps: float) -> np.ndarray:
    if not space.is_multiscale:
        return np.zeros(mesh.N)
    return np.atleast_1d(wave_number(f, mesh.midpoints, eps))


_CHUNK_POINTS = 2_000_000


def _integrate(cfg, kind, k, center, hw, xr, wr, sel, mass, stiff, fmass):
    x = center[sel, None] + hw[sel, None] * xr
    w = hw[sel, None] * wr
    val, der = eval_members(kind, k[sel], center[sel], hw[sel], x)
    cval = val.conj() * w[..., None]
    mass[sel] = np.einsum("eqm,eqn->emn", cval, val)
    fmass[sel] = np.einsum("eqm,eqn->emn", cval * cfg.f(x)[..., None], val)
    stiff[sel] = np.einsum("eqm,eqn->emn", der.conj() * w[..., None], val)


def element_data(cfg: SolveConfig, refine: int = 1, extra: int = 0) -> ElementData:
    mesh, kind = cfg.mesh, cfg.space
    k = element_wave_numbers(mesh, kind, cfg.f, cfg.eps)
    center, hw = mesh.midpoints, 0.5 * mesh.widths
    nq = refine * node_count(kind, k, mesh.widths, cfg.ppw) + extra
    nq = np.atleast_1d(nq)
    d = kind.dim
    mass = np.empty((mesh.N, d, d), dtype=complex)
    stiff = np.empty_like(mass)
    fmass = np.empty_like(mass)
    # elements sharing a node count are integrated together
    for n in np.unique(nq):
        group = np.flatnonzero(nq == n)
        xr, wr = gauss_legendre(int(n))
        step = max(1, _CHUNK_POINTS // (int(n) * d))
        for start in range(0, group.size, step):
            sel = group[start : start + step]
            _integrate(cfg, kind, k, center, hw, xr, wr, sel, mass, stiff, fmass)
    ends = np.column_stack([mesh.left, mesh.right])
    ev, _ = eval_members(kind, k, center, hw, ends)
    return ElementData(k, center, hw, nq, mass, stiff, fmass, ev[:, 0, :], ev[:, 1, :])


@dataclass(frozen=True)
class GlobalSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    dof_map: DofMap
    config: SolveConfig
    data: ElementData

    @property
    def size(self) -> int:
        return self.dof_map.size


class _Triplets:
    def __init__(self):
        self.rows, self.cols, self.vals = [], [], []

    def add_blocks(self, row0, col0, blocks):
        """Add dense blocks ``blocks[e]`` at offsets ``(row0[e], col0[e])``."""
        blocks = np.asarray(blocks)
        if not np.any(blocks):
            return
        nb, r, c = blocks.shape
        rr = (np.asarray(row0, dtype=np.int64)[:, None] + np.arange(r))[:, :, None]
        cc = (np.asarray(col0, dtype=np.int64)[:, None] + np.arange(c))[:, None, :]
        self.rows.append(np.broadcast_to(rr, blocks.shape).ravel())
        self.cols.append(np.broadcast_to(cc, blocks.shape).ravel())
        self.vals.append(blocks.ravel())

    def to_csr(self, n):
        itype = np.int32 if n < 2**31 - 1 else np.int64
        rows = np.concatenate(self.rows).astype(itype)
        cols = np.concatenate(self.cols).astype(itype)
        vals = np.concatenate(self.vals)
        self.rows = self.cols = self.vals = None
        mat = sp.coo_matrix((vals, (rows, cols)), shape=(n, n))
        del rows, cols, vals
        mat = mat.tocsr()
        mat.sum_duplicates()
        mat.eliminate_zeros()
        mat.sort_indices()
        return mat


def _interface_coefficients(alpha, beta):
    """Trace rows as linear maps of ``(u-, q-, u+, q+)``; shape ``(K, 2, 4)``."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    K = alpha.size
    c = np.zeros((K, 2, 4), dtype=complex)
    # u_hat = u- - i beta (q- - q+)
    c[:, 0, 0] = 1.0
    c[:, 0, 1] = -1j * beta
    c[:, 0, 3] = 1j * beta
    # q_hat = q+ + i alpha (u- - u+)
    c[:, 1, 3] = 1.0
    c[:, 1, 0] = 1j * alpha
    c[:, 1, 2] = -1j * alpha
    return c


def assemble_global(
    cfg: SolveConfig, alpha=None, beta=None, incoming: float = 1.0, data: ElementData | None = None
) -> GlobalSystem:
    """Assemble matrix and load vector.

    ``alpha`` / ``beta`` may be arrays of length ``N - 1`` to override the
    penalties interface by interface.  ``incoming`` scales the boundary data
    (the constant 2 on the right of the left boundary condition).
    """
    mesh, kind, eps = cfg.mesh, cfg.space, cfg.eps
    N, d = mesh.N, kind.dim
    if N < 1:
        raise ValueError("empty mesh")
    gamma = cfg.params.gamma
    f_a, f_b = float(cfg.f(mesh.a)), float(cfg.f(mesh.b))
    if not (f_a > 0 and f_b > 0):
        raise ValueError("f must be positive at both boundary points")
    if data is None:
        data = element_data(cfg)
    dofs = DofMap(N, d)
    trip = _Triplets()
    base = 2 * d * np.arange(N)

    vol = np.empty((N, 2 * d, 2 * d), dtype=complex)
    vol[:, :d, :d] = eps * data.stiff
    vol[:, :d, d:] = data.mass
    vol[:, d:, :d] = -data.fmass
    vol[:, d:, d:] = eps * data.stiff
    trip.add_blocks(base, base, vol)

    if N > 1:
        K = N - 1
        a_arr = np.broadcast_to(cfg.params.alpha if alpha is None else alpha, (K,))
        b_arr = np.broadcast_to(cfg.params.beta if beta is None else beta, (K,))
        coef = _interface_coefficients(a_arr, b_arr)
        left_el, right_el = np.arange(K), np.arange(1, N)
        # trace sources (u-, q-, u+, q+): element, variable, endpoint values
        sources = [
            (left_el, U, data.phi_right[:-1]),
            (left_el, Q, data.phi_right[:-1]),
            (right_el, U, data.phi_left[1:]),
            (right_el, Q, data.phi_left[1:]),
        ]
        # rows: the left element sees -eps * trace * conj(w(x-)), the right one +eps
        testers = [(left_el, -eps, data.phi_right[:-1]), (right_el, eps, data.phi_left[1:])]
        for row_el, sign, test in testers:
            ctest = test.conj()
            for eq in (0, 1):
                for t, (col_el, var, phi) in enumerate(sources):
                    c = sign * coef[:, eq, t]
                    if not np.any(c):
                        continue
                    blocks = c[:, None, None] * ctest[:, :, None] * phi[:, None, :]
                    trip.add_blocks(2 * d * row_el + eq * d, 2 * d * col_el + var * d, blocks)

    rhs = np.zeros(dofs.size, dtype=complex)
    sa, sb = math.sqrt(f_a), math.sqrt(f_b)
    # x = a: +eps * trace * conj(w(a)) on element 0
    pl = data.phi_left[0]
    left = np.array(
        [[1 - gamma, 1j * gamma / sa], [-1j * (1 - gamma) * sa, gamma]], dtype=complex
    )
    const_left = incoming * np.array([2 * gamma, 2j * (1 - gamma) * sa])
    # x = b: -eps * trace * conj(w(b)) on element N-1
    pr = data.phi_right[-1]
    right = np.array(
        [[1 - gamma, -1j * gamma / sb], [1j * (1 - gamma) * sb, gamma]], dtype=complex
    )
    for el, sign, phi, lin in ((0, eps, pl, left), (N - 1, -eps, pr, right)):
        for eq in (0, 1):
            for var in (U, Q):
                block = sign * lin[eq, var] * np.outer(phi.conj(), phi)
                trip.add_blocks([2 * d * el + eq * d], [2 * d * el + var * d], block[None])
    for eq in (0, 1):
        rhs[eq * d : (eq + 1) * d] -= eps * const_left[eq] * pl.conj()

    return GlobalSystem(trip.to_csr(dofs.size), rhs, dofs, cfg, data)


def matrix_stats(sys: GlobalSystem) -> dict:
    A = sys.matrix.tocoo()
    bw = int(np.max(np.abs(A.row - A.col))) if A.nnz else 0
    return {"dimension": A.shape[0], "nnz": int(A.nnz), "bandwidth": bw}


def boundary_traces(sys: GlobalSystem, coeffs):
    """Numerical traces at ``a`` and ``b`` reconstructed from a coefficient vector."""
    from .trace import boundary_trace_left, boundary_trace_right

    cfg = sys.config
    u, q = sys.dof_map.split(coeffs)
    pl, pr = sys.data.phi_left[0], sys.data.phi_right[-1]
    gamma = cfg.params.gamma
    left = boundary_trace_left(u[0] @ pl, q[0] @ pl, float(cfg.f(cfg.mesh.a)), gamma)
    right = boundary_trace_right(u[-1] @ pr, q[-1] @ pr, float(cfg.f(cfg.mesh.b)), gamma)
    return left, right


def plane_wave_coefficients(cfg: SolveConfig, f0: float) -> np.ndarray:
    """Exact coefficients of ``u = exp(i sqrt(f0) (x - a) / eps)``, ``q = i sqrt(f0) u``.

    Valid only for the constant field ``f = f0`` and a multiscale space, where
    the plane wave lies in every local space.
    """
    if not cfg.space.is_multiscale:
        raise ValueError("plane waves are not in polynomial spaces")
    mesh = cfg.mesh
    k = math.sqrt(f0) / cfg.eps
    dofs = DofMap(mesh.N, cfg.space.dim)
    u = np.zeros((mesh.N, dofs.dim), dtype=complex)
    u[:, 0] = np.exp(1j * k * (mesh.midpoints - mesh.a))
    return dofs.join(u, 1j * math.sqrt(f0) * u)
