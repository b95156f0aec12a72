"""Experiment engine: single cases, sweeps, convergence rates, resonance spikes."""

from __future__ import annotations

import itertools
import logging
import math
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..assembly import SolveConfig, assemble_global
from ..basis import DEFAULT_PPW, SpaceKind
from ..coefficients import CoefficientField, field_from_case
from ..linsolve import DENSE_LIMIT, ConditionReport, Factorization, condition_estimate
from ..mesh import mesh_h, uniform_partition
from ..solution import DGSolution, cached_reference, exact_plane_wave, l2_errors
from ..trace import TraceParams

log = logging.getLogger(__name__)

SPIKE_FACTOR = 10.0
SPIKE_WINDOW = 8
ROUNDOFF_FLOOR = 1e-10


@dataclass(frozen=True)
class CasePoint:
    """One fully specified configuration."""

    f: CoefficientField
    eps: float
    space: SpaceKind
    N: int
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.5
    a: float = 0.0
    b: float = 1.0
    ppw: float = DEFAULT_PPW
    cond_method: str = "auto"
    N_ref: int | None = None


@dataclass(frozen=True)
class ExperimentRecord:
    space: SpaceKind
    eps: float
    alpha: float
    beta: float
    gamma: float
    N: int
    h: float
    l2_error_u: float
    l2_error_q: float
    condition: ConditionReport
    singular_flag: bool = False
    wall_time: float = field(default=0.0, compare=False)

    @property
    def curve_key(self) -> tuple:
        """Everything but ``N``: records sharing it form one curve."""
        return (self.space.label, self.eps, self.alpha, self.beta, self.gamma)


def _reference_for(point: CasePoint, ref_cache):
    return cached_reference(ref_cache, point.f, point.eps, point.N_ref, point.a, point.b, point.gamma)


def run_case(point: CasePoint, ref_cache=None, oracle=None) -> ExperimentRecord:
    """Assemble, solve, measure errors and the condition number.

    Constant ``f`` is checked against the plane wave, anything else against
    the fine-mesh reference (built or loaded via ``ref_cache``).  A singular
    factorization is reported in the record, never raised.
    """
    t0 = time.perf_counter()
    mesh = uniform_partition(point.a, point.b, point.N)
    params = TraceParams(point.alpha, point.beta, point.gamma)
    cfg = SolveConfig(mesh, point.space, point.eps, point.f, params, point.ppw)
    if oracle is None:
        if point.f.is_constant:
            oracle = exact_plane_wave(point.f.constant, point.eps, point.a)
        else:
            oracle = _reference_for(point, ref_cache)
    if hasattr(oracle, "require"):
        oracle.require(point.f, point.eps)
    sys = assemble_global(cfg)
    factor = Factorization(sys.matrix)
    cond = condition_estimate(sys, point.cond_method, factor=factor)
    if factor.singular:
        log.warning("singular system at %s N=%d (pivot %s)", point.space, point.N, factor.pivot_index)
        eu = eq = math.inf
        cond = ConditionReport(math.inf, cond.method, cond.dimension, True)
    else:
        sol = DGSolution.from_vector(cfg, factor.solve(sys.rhs))
        errs = l2_errors(sol, oracle, ("u", "q"))
        eu, eq = errs["u"], errs["q"]
    return ExperimentRecord(
        space=point.space,
        eps=float(point.eps),
        alpha=float(point.alpha),
        beta=float(point.beta),
        gamma=float(point.gamma),
        N=int(point.N),
        h=mesh_h(mesh),
        l2_error_u=eu,
        l2_error_q=eq,
        condition=cond,
        singular_flag=factor.singular,
        wall_time=time.perf_counter() - t0,
    )


@dataclass(frozen=True)
class SweepSpec:
    f_case: str = "const10"
    a: float = 0.0
    b: float = 1.0
    eps: tuple = (0.005,)
    spaces: tuple = ("E1",)
    penalties: tuple = ((0.0, 0.0),)
    gamma: float = 0.5
    N: tuple = ()
    cond_method: str = "auto"
    ppw: float = DEFAULT_PPW
    N_ref: int | None = None
    out: str | None = None
    plot_dir: str | None = None

    def __post_init__(self):
        if any(int(n) != n or n < 1 for n in self.N):
            raise ValueError("all element counts must be positive integers")
        if any(not e > 0 for e in self.eps):
            raise ValueError("eps must be positive")
        for sp in self.spaces:
            SpaceKind.parse(sp)

    @property
    def field(self) -> CoefficientField:
        return field_from_case(self.f_case)

    def curve_cond_method(self, space: SpaceKind) -> str:
        """Condition method shared by every point of a curve.

        ``auto`` picks the dense 2-norm when the largest system of the curve
        is within the dense limit, so one curve never mixes two norms.
        """
        if self.cond_method != "auto":
            return self.cond_method
        largest = 2 * space.dim * max(self.N)
        return "dense_2norm" if largest <= DENSE_LIMIT else "onenorm_estimate"

    def points(self) -> list[CasePoint]:
        f = self.field
        out = []
        for eps, label, (al, be), N in itertools.product(self.eps, self.spaces, self.penalties, self.N):
            space = SpaceKind.parse(label)
            out.append(
                CasePoint(
                    f, float(eps), space, int(N), float(al), float(be), self.gamma,
                    self.a, self.b, self.ppw, self.curve_cond_method(space), self.N_ref,
                )
            )
        return out


def _worker_case(args):
    point, ref_cache = args
    return run_case(point, ref_cache)


def run_sweep(spec: SweepSpec, ref_cache=None, workers: int = 1, progress=None) -> list[ExperimentRecord]:
    """All points of the Cartesian product, in spec order.

    References are built once per ``eps`` before the sweep starts.  With
    ``workers > 1`` points run in separate processes that load the references
    from ``ref_cache`` (a temporary directory when none is given).
    """
    points = spec.points()
    if not points:
        return []
    f = spec.field
    refs = {}
    tmp = None
    if workers > 1 and ref_cache is None and not f.is_constant:
        tmp = tempfile.TemporaryDirectory(prefix="msdg-ref-")
        ref_cache = tmp.name
    try:
        if not f.is_constant:
            for eps in dict.fromkeys(p.eps for p in points):
                refs[eps] = cached_reference(ref_cache, f, eps, spec.N_ref, spec.a, spec.b, spec.gamma)
        records = []
        if workers <= 1:
            for i, p in enumerate(points):
                records.append(run_case(p, ref_cache, refs.get(p.eps)))
                if progress:
                    progress(i + 1, len(points), records[-1])
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                jobs = [(p, ref_cache) for p in points]
                # map preserves submission order
                for i, rec in enumerate(pool.map(_worker_case, jobs)):
                    records.append(rec)
                    if progress:
                        progress(i + 1, len(points), rec)
        return records
    finally:
        if tmp is not None:
            tmp.cleanup()


def group_records(records) -> dict[tuple, list[ExperimentRecord]]:
    """Curves keyed by ``ExperimentRecord.curve_key``, each sorted by ``N``."""
    groups: dict[tuple, list] = {}
    for r in records:
        groups.setdefault(r.curve_key, []).append(r)
    return {k: sorted(v, key=lambda r: r.N) for k, v in groups.items()}


@dataclass(frozen=True)
class RatePair:
    N1: int
    N2: int
    rate: float
    reliable: bool


def observed_rate(e1: float, e2: float, N1: int, N2: int) -> float:
    return math.log(e1 / e2) / math.log(N2 / N1)


def convergence_rates(records, floor: float = ROUNDOFF_FLOOR) -> list[RatePair]:
    """Rates between consecutive ``N`` of one curve.

    Pairs with either error below ``floor`` sit on the round-off plateau and
    are flagged unreliable.
    """
    recs = sorted(records, key=lambda r: r.N)
    if len({r.curve_key for r in recs}) > 1:
        raise ValueError("convergence_rates expects records from a single configuration")
    out = []
    for r1, r2 in zip(recs, recs[1:]):
        e1, e2 = r1.l2_error_u, r2.l2_error_u
        ok = e1 >= floor and e2 >= floor and math.isfinite(e1) and math.isfinite(e2)
        rate = observed_rate(e1, e2, r1.N, r2.N) if e1 > 0 and e2 > 0 else math.nan
        out.append(RatePair(r1.N, r2.N, rate, ok))
    return out


@dataclass(frozen=True)
class SpikeRegion:
    peak: int
    members: tuple
    ratio: float
    error: float


def spike_ratios(Ns, values, window: int = SPIKE_WINDOW) -> np.ndarray:
    """``value / median`` over the ``window`` nearest other grid points by ``N``."""
    Ns = np.asarray(Ns, dtype=float)
    values = np.asarray(values, dtype=float)
    ratios = np.empty_like(values)
    for i in range(Ns.size):
        dist = np.abs(Ns - Ns[i])
        dist[i] = np.inf
        # ties broken towards smaller N for determinism
        order = np.lexsort((Ns, dist))[: min(window, Ns.size - 1)]
        ratios[i] = values[i] / np.median(values[order])
    return ratios


def resonance_report(records, spike_factor: float = SPIKE_FACTOR, window: int = SPIKE_WINDOW, key="error"):
    """Spike regions of one curve, each reported by its peak ``N``.

    ``N`` is a spike when its value is at least ``spike_factor`` times the
    median over its ``window`` nearest neighbours; spikes adjacent on the
    grid merge into one region.  ``key`` selects ``"error"`` or ``"cond"``.
    """
    recs = sorted(records, key=lambda r: r.N)
    if len(recs) < 5:
        raise ValueError("resonance_report needs at least five records")
    Ns = np.array([r.N for r in recs])
    if key == "error":
        vals = np.array([r.l2_error_u for r in recs])
    else:
        vals = np.array([r.condition.value for r in recs])
    ratios = spike_ratios(Ns, vals, window)
    flagged = ratios >= spike_factor
    regions = []
    i = 0
    while i < len(recs):
        if not flagged[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(recs) and flagged[j + 1]:
            j += 1
        idx = np.arange(i, j + 1)
        peak = idx[np.argmax(vals[idx])]
        regions.append(SpikeRegion(int(Ns[peak]), tuple(int(n) for n in Ns[idx]), float(ratios[peak]), float(vals[peak])))
        i = j + 1
    return regions


# ---------------------------------------------------------------------------
# grids of the two numerical examples

EXAMPLE1_N = (10, 20, 40, 80, 160, 200)
EXAMPLE1_PENALTIES = ((0.0, 0.0), (0.5, 0.5), (1.0, 1.0))
EXAMPLE2_PENALTIES = ((0.0, 0.0), (0.1, 0.1), (0.5, 0.5), (1.0, 1.0))
ALL_SPACES = ("E1", "E2", "E3", "T3", "T5")


def example2_grid(eps: float) -> tuple[int, ...]:
    """Element counts for the variable-coefficient sweeps, dense near ``h ~ eps``."""
    if eps >= 0.005:
        grid = list(range(5, 101)) + list(range(110, 201, 10)) + [240, 320, 480, 640]
    else:
        grid = (
            list(range(5, 21)) + list(range(22, 41, 2)) + list(range(45, 100, 5))
            + list(range(100, 201)) + list(range(210, 301, 10)) + [320, 400, 480, 560, 640]
        )
    return tuple(grid)


def example1_spec(**kw) -> SweepSpec:
    return SweepSpec(
        f_case="const10", eps=(0.005, 0.001), spaces=ALL_SPACES, penalties=EXAMPLE1_PENALTIES, N=EXAMPLE1_N, **kw
    )


def example2_spec(eps: float, spaces=("E1",), penalties=EXAMPLE2_PENALTIES, **kw) -> SweepSpec:
    return SweepSpec(
        f_case="sinp2", eps=(eps,), spaces=tuple(spaces), penalties=tuple(penalties), N=example2_grid(eps), **kw
    )


PRESETS = {
    "example1": lambda: example1_spec(),
    "example2-eps0.005": lambda: example2_spec(0.005, ALL_SPACES),
    "example2-eps0.001": lambda: example2_spec(0.001, ALL_SPACES),
}
