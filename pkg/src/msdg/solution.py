"""Discrete solutions, L2 errors, and the two error oracles.

Constant ``f`` has the plane wave as exact solution.  Otherwise errors are
measured against a fine-mesh piecewise cubic solution computed with the
alternating fluxes, cached on disk in a small binary format::

    magic      8 bytes   b"MSDGREF\\0"
    version    uint32 LE
    meta_len   uint32 LE
    meta       meta_len bytes of UTF-8 JSON
    count      uint64 LE  (number of complex coefficients)
    payload    count * 2 float64 LE, interleaved (real, imag)
"""

from __future__ import annotations

import fcntl
import json
import math
import os
import struct
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .assembly import DofMap, SolveConfig, assemble_global, element_wave_numbers
from .basis import DEFAULT_PPW, SpaceKind, eval_members, gauss_legendre, node_count
from .coefficients import CoefficientField, field_from_descriptor
from .linsolve import solve
from .mesh import MeshPartition, uniform_partition
from .trace import TraceParams

MAGIC = b"MSDGREF\0"
FORMAT_VERSION = 1
GENERATOR_VERSION = "msdg-reference-1"
REFERENCE_SPACE = SpaceKind("Poly", 3)


@dataclass(frozen=True, eq=False)
class DGSolution:
    mesh: MeshPartition
    space: SpaceKind
    eps: float
    f: CoefficientField
    u: np.ndarray
    q: np.ndarray
    k: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        shape = (self.mesh.N, self.space.dim)
        u = np.asarray(self.u, dtype=complex).reshape(shape)
        q = np.asarray(self.q, dtype=complex).reshape(shape)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "q", q)
        if self.k is None:
            k = element_wave_numbers(self.mesh, self.space, self.f, self.eps)
            object.__setattr__(self, "k", k)

    @classmethod
    def from_vector(cls, cfg: SolveConfig, vec) -> "DGSolution":
        u, q = DofMap(cfg.mesh.N, cfg.space.dim).split(vec)
        return cls(cfg.mesh, cfg.space, cfg.eps, cfg.f, u, q)

    def to_vector(self) -> np.ndarray:
        return DofMap(self.mesh.N, self.space.dim).join(self.u, self.q)

    def _members_at(self, x):
        x = np.asarray(x, dtype=float)
        idx = self.mesh.locate(x.ravel())
        hw = 0.5 * self.mesh.widths[idx]
        val, _ = eval_members(self.space, self.k[idx], self.mesh.midpoints[idx], hw, x.reshape(-1, 1))
        return idx, val[:, 0, :]

    def __call__(self, x):
        """Vectorised ``(u_h(x), q_h(x))``; interior breakpoints take left limits."""
        x = np.asarray(x, dtype=float)
        idx, phi = self._members_at(x)
        u = np.einsum("pm,pm->p", phi, self.u[idx]).reshape(x.shape)
        q = np.einsum("pm,pm->p", phi, self.q[idx]).reshape(x.shape)
        return u, q

    def u_at(self, x):
        return self(x)[0]

    def q_at(self, x):
        return self(x)[1]


def eval_solution(sol: DGSolution, x):
    u, q = sol(x)
    if np.ndim(x) == 0:
        return complex(u), complex(q)
    return u, q


@dataclass(frozen=True)
class PlaneWave:
    """``u = exp(i sqrt(f0) (x - a) / eps)`` and ``q = eps u' = i sqrt(f0) u``."""

    f0: float
    eps: float
    a: float

    def __post_init__(self):
        if not self.f0 > 0 or not self.eps > 0:
            raise ValueError("need f0 > 0 and eps > 0")

    @property
    def k(self) -> float:
        return math.sqrt(self.f0) / self.eps

    def u_at(self, x):
        return np.exp(1j * self.k * (np.asarray(x, dtype=float) - self.a))

    def q_at(self, x):
        return 1j * math.sqrt(self.f0) * self.u_at(x)

    def __call__(self, x):
        return self.u_at(x)


def exact_plane_wave(f0: float, eps: float, a: float) -> PlaneWave:
    return PlaneWave(float(f0), float(eps), float(a))


def _component(oracle, name):
    """``x -> values`` for component ``name`` of an oracle or plain callable."""
    attr = getattr(oracle, f"{name}_at", None)
    if attr is not None:
        return attr
    if name == "u":
        return oracle
    raise TypeError("oracle does not provide a q component")


def error_quadrature(sol: DGSolution, refine: int = 2, extra: int = 0, ppw: float = DEFAULT_PPW):
    """Yield ``(element indices, nodes, weights)`` for the error quadrature."""
    mesh = sol.mesh
    nq = np.atleast_1d(refine * node_count(sol.space, sol.k, mesh.widths, ppw) + extra)
    hw = 0.5 * mesh.widths
    for n in np.unique(nq):
        sel = np.flatnonzero(nq == n)
        xr, wr = gauss_legendre(int(n))
        yield sel, mesh.midpoints[sel, None] + hw[sel, None] * xr, hw[sel, None] * wr


def l2_errors(sol: DGSolution, oracle, components=("u",), refine: int = 2, extra: int = 0):
    """L2 norms of ``sol - oracle`` for the requested components.

    Each element uses its own Gauss-Legendre rule with ``refine`` times the
    assembly node count.
    """
    if isinstance(oracle, DGSolution):
        other = oracle
        oracle = type("_SolOracle", (), {"u_at": staticmethod(other.u_at), "q_at": staticmethod(other.q_at)})()
    out = {}
    for name in components:
        coeff = sol.u if name == "u" else sol.q
        exact = _component(oracle, name)
        parts = []
        for sel, x, w in error_quadrature(sol, refine=refine, extra=extra):
            val, _ = eval_members(sol.space, sol.k[sel], sol.mesh.midpoints[sel], 0.5 * sol.mesh.widths[sel], x)
            approx = np.einsum("eqm,em->eq", val, coeff[sel])
            diff = approx - np.asarray(exact(x), dtype=complex)
            parts.append((sel, np.sum(w * np.abs(diff) ** 2, axis=1)))
        per_element = np.zeros(sol.mesh.N)
        for sel, vals in parts:
            per_element[sel] = vals
        # np.sum reduces pairwise in fixed order
        out[name] = float(math.sqrt(np.sum(per_element)))
    return out


def l2_error(sol: DGSolution, oracle, refine: int = 2, extra: int = 0) -> float:
    """L2 error of the ``u`` component."""
    return l2_errors(sol, oracle, ("u",), refine=refine, extra=extra)["u"]


# ---------------------------------------------------------------------------
# fine-mesh reference


class ReferenceMismatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ReferenceSolution:
    metadata: dict
    solution: DGSolution

    def u_at(self, x):
        return self.solution.u_at(x)

    def q_at(self, x):
        return self.solution.q_at(x)

    def __call__(self, x):
        return self.solution.u_at(x)

    def matches(self, f: CoefficientField, eps: float) -> bool:
        return self.metadata["f"] == f.descriptor and self.metadata["eps"] == float(eps)

    def require(self, f: CoefficientField, eps: float):
        if not self.matches(f, eps):
            raise ReferenceMismatch(
                f"reference is for f={self.metadata['f']!r}, eps={self.metadata['eps']!r}; "
                f"requested f={f.descriptor!r}, eps={eps!r}"
            )


def max_on_interval(f, a: float, b: float, samples: int = 20001) -> float:
    return float(np.max(f(np.linspace(a, b, samples))))


def min_reference_elements(f, eps: float, a: float = 0.0, b: float = 1.0, per_wavelength: int = 20) -> int:
    """Smallest fine mesh with ``per_wavelength`` elements per local wavelength."""
    return math.ceil(per_wavelength * (b - a) * math.sqrt(max_on_interval(f, a, b)) / (2 * math.pi * eps))


def default_reference_elements(eps: float) -> int:
    return 250_000 if eps < 0.005 else 50_000


def generate_reference(
    f: CoefficientField,
    eps: float,
    N_ref: int,
    a: float = 0.0,
    b: float = 1.0,
    gamma: float = 0.5,
) -> ReferenceSolution:
    """Piecewise cubic solution with alternating fluxes on ``N_ref`` uniform elements."""
    need = min_reference_elements(f, eps, a, b)
    if N_ref < need:
        raise ValueError(f"N_ref={N_ref} under-resolves the waves; need at least {need}")
    cfg = SolveConfig(uniform_partition(a, b, N_ref), REFERENCE_SPACE, eps, f, TraceParams(0.0, 0.0, gamma))
    sys = assemble_global(cfg)
    vec = solve(sys)
    sol = DGSolution.from_vector(cfg, vec)
    meta = {
        "f": f.descriptor,
        "eps": float(eps),
        "N_ref": int(N_ref),
        "a": float(a),
        "b": float(b),
        "space": REFERENCE_SPACE.label,
        "alpha": 0.0,
        "beta": 0.0,
        "gamma": float(gamma),
        "generator": GENERATOR_VERSION,
    }
    return ReferenceSolution(meta, sol)


def save_reference(ref: ReferenceSolution, path) -> None:
    path = Path(path)
    meta = json.dumps(ref.metadata, sort_keys=True).encode("utf-8")
    payload = np.ascontiguousarray(ref.solution.to_vector(), dtype="<c16").view("<f8")
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(meta)))
        fh.write(meta)
        fh.write(struct.pack("<Q", payload.size // 2))
        fh.write(payload.tobytes())
    os.replace(tmp, path)


def load_reference(path, f: CoefficientField | None = None, eps: float | None = None) -> ReferenceSolution:
    """Read a cached reference; mismatched metadata is a hard error."""
    data = Path(path).read_bytes()
    head = len(MAGIC) + 8
    if len(data) < head or data[: len(MAGIC)] != MAGIC:
        raise ReferenceMismatch(f"{path}: not a reference file")
    version, meta_len = struct.unpack_from("<II", data, len(MAGIC))
    if version != FORMAT_VERSION:
        raise ReferenceMismatch(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    meta = json.loads(data[head : head + meta_len].decode("utf-8"))
    if meta.get("generator") != GENERATOR_VERSION:
        raise ReferenceMismatch(f"{path}: generator {meta.get('generator')!r} is stale")
    off = head + meta_len
    (count,) = struct.unpack_from("<Q", data, off)
    off += 8
    space = SpaceKind.parse(meta["space"])
    expected = 2 * space.dim * meta["N_ref"]
    if count != expected or len(data) - off != 16 * count:
        raise ReferenceMismatch(f"{path}: payload holds {len(data) - off} bytes, header says {count} values")
    vec = np.frombuffer(data, dtype="<f8", offset=off).view("<c16").astype(complex)
    field_ = f if f is not None and f.descriptor == meta["f"] else field_from_descriptor(meta["f"])
    mesh = uniform_partition(meta["a"], meta["b"], meta["N_ref"])
    cfg = SolveConfig(mesh, space, meta["eps"], field_, TraceParams(meta["alpha"], meta["beta"], meta["gamma"]))
    ref = ReferenceSolution(meta, DGSolution.from_vector(cfg, vec))
    if f is not None or eps is not None:
        if f is not None and meta["f"] != f.descriptor:
            raise ReferenceMismatch(f"{path}: cached for f={meta['f']!r}, not {f.descriptor!r}")
        if eps is not None and meta["eps"] != float(eps):
            raise ReferenceMismatch(f"{path}: cached for eps={meta['eps']!r}, not {eps!r}")
    return ref


def reference_filename(f: CoefficientField, eps: float, N_ref: int, a: float, b: float, gamma: float) -> str:
    tag = "".join(c if c.isalnum() else "_" for c in f.descriptor)
    return f"ref_{tag}_eps{eps!r}_N{N_ref}_a{a!r}_b{b!r}_g{gamma!r}.msdgref"


@contextmanager
def _locked(path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path.with_name(path.name + ".lock"), "w") as fh:
        fcntl.flock(fh, fcntl.LOCK_EX)
        try:
            yield
        finally:
            fcntl.flock(fh, fcntl.LOCK_UN)


def cached_reference(
    cache_dir,
    f: CoefficientField,
    eps: float,
    N_ref: int | None = None,
    a: float = 0.0,
    b: float = 1.0,
    gamma: float = 0.5,
) -> ReferenceSolution:
    """Load the reference from ``cache_dir`` or build and store it (one builder per key)."""
    if N_ref is None:
        N_ref = default_reference_elements(eps)
    if cache_dir is None:
        return generate_reference(f, eps, N_ref, a, b, gamma)
    path = Path(cache_dir) / reference_filename(f, eps, N_ref, a, b, gamma)
    with _locked(path):
        if path.exists():
            return load_reference(path, f, eps)
        ref = generate_reference(f, eps, N_ref, a, b, gamma)
        save_reference(ref, path)
        return ref
