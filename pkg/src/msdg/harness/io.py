"""CSV records, two-column plot data and flat ``key = value`` sweep configs."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import replace
from pathlib import Path

from ..basis import SpaceKind
from ..linsolve import ConditionReport
from .experiment import ExperimentRecord, SweepSpec, group_records

CSV_HEADER = (
    "space", "eps", "alpha", "beta", "gamma", "N", "h",
    "l2_error_u", "l2_error_q", "cond", "cond_method", "singular", "wall_time",
)


def fmt(x: float) -> str:
    """Six significant digits, scientific notation."""
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.5e}"


def format_csv(records, timings: bool = False) -> str:
    buf = io.StringIO()
    buf.write(",".join(CSV_HEADER) + "\n")
    for r in records:
        row = [
            r.space.label, fmt(r.eps), fmt(r.alpha), fmt(r.beta), fmt(r.gamma), str(r.N), fmt(r.h),
            fmt(r.l2_error_u), fmt(r.l2_error_q), fmt(r.condition.value), r.condition.method,
            "1" if r.singular_flag else "0", fmt(r.wall_time) if timings else "nan",
        ]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def write_csv(records, path, timings: bool = False) -> None:
    """Write records; wall times only with ``timings`` so reruns stay byte-identical."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_csv(records, timings), encoding="ascii", newline="")


def read_csv(path) -> list[ExperimentRecord]:
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        out = []
        for row in reader:
            N = int(row["N"])
            singular = row["singular"] == "1"
            out.append(
                ExperimentRecord(
                    space=SpaceKind.parse(row["space"]),
                    eps=float(row["eps"]),
                    alpha=float(row["alpha"]),
                    beta=float(row["beta"]),
                    gamma=float(row["gamma"]),
                    N=N,
                    h=float(row["h"]),
                    l2_error_u=float(row["l2_error_u"]),
                    l2_error_q=float(row["l2_error_q"]),
                    condition=ConditionReport(float(row["cond"]), row["cond_method"], 0, singular),
                    singular_flag=singular,
                    wall_time=float(row["wall_time"]),
                )
            )
        return out


def curve_stem(key: tuple) -> str:
    space, eps, alpha, beta, gamma = key
    return f"{space}_eps{eps:g}_a{alpha:g}_b{beta:g}_g{gamma:g}"


def emit_plot_data(records, directory) -> list[Path]:
    """One ``*_error.dat`` and one ``*_cond.dat`` file per curve.

    Columns are ``log10(N)`` and ``log10(value)``; non-finite values (singular
    systems) are left out.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for key, recs in sorted(group_records(records).items()):
        stem = curve_stem(key)
        for suffix, label, getter in (
            ("error", "log10 L2 error of u", lambda r: r.l2_error_u),
            ("cond", "log10 condition number", lambda r: r.condition.value),
        ):
            lines = [f"# {stem}: log10 N, {label}"]
            for r in recs:
                v = getter(r)
                if math.isfinite(v) and v > 0:
                    lines.append(f"{math.log10(r.N):.6f} {math.log10(v):.6f}")
            path = directory / f"{stem}_{suffix}.dat"
            path.write_text("\n".join(lines) + "\n", encoding="ascii")
            written.append(path)
    return written


# ---------------------------------------------------------------------------
# flat key = value config


def parse_int_list(text: str) -> list[int]:
    """Comma list of integers and inclusive ranges ``lo:hi[:step]``."""
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if ":" in item:
            parts = [int(p) for p in item.split(":")]
            if len(parts) not in (2, 3):
                raise ValueError(f"bad range {item!r}")
            lo, hi = parts[0], parts[1]
            step = parts[2] if len(parts) == 3 else 1
            if step < 1:
                raise ValueError(f"bad range step in {item!r}")
            out.extend(range(lo, hi + 1, step))
        else:
            out.append(int(item))
    return out


def parse_float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def read_config(path) -> dict[str, str]:
    """``key = value`` per line, ``#`` comments, later keys override earlier ones."""
    cfg = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        cfg[key.strip().replace("-", "_")] = value.strip()
    return cfg


def penalties_from(alpha: list[float], beta: list[float] | None) -> tuple:
    if beta is None:
        beta = alpha
    if len(alpha) != len(beta):
        raise ValueError("alpha and beta lists must have equal length (they are paired)")
    return tuple(zip(alpha, beta))


SPEC_KEYS = {"fcase", "a", "b", "eps", "space", "alpha", "beta", "gamma", "nelems", "cond", "quad_ppw", "n_ref", "out", "plots"}


def spec_from_mapping(cfg: dict[str, str], base: SweepSpec | None = None) -> SweepSpec:
    unknown = set(cfg) - SPEC_KEYS - {"ref_cache", "workers"}
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    base = base or SweepSpec()
    kw = {}
    if "fcase" in cfg:
        kw["f_case"] = cfg["fcase"]
    for key in ("a", "b", "gamma"):
        if key in cfg:
            kw[key] = float(cfg[key])
    if "eps" in cfg:
        kw["eps"] = tuple(parse_float_list(cfg["eps"]))
    if "space" in cfg:
        kw["spaces"] = tuple(s.strip() for s in cfg["space"].split(",") if s.strip())
    if "alpha" in cfg or "beta" in cfg:
        alpha = parse_float_list(cfg.get("alpha", cfg.get("beta")))
        beta = parse_float_list(cfg["beta"]) if "beta" in cfg else None
        kw["penalties"] = penalties_from(alpha, beta)
    if "nelems" in cfg:
        kw["N"] = tuple(parse_int_list(cfg["nelems"]))
    if "cond" in cfg:
        kw["cond_method"] = cfg["cond"]
    if "quad_ppw" in cfg:
        kw["ppw"] = float(cfg["quad_ppw"])
    if "n_ref" in cfg:
        kw["N_ref"] = int(cfg["n_ref"])
    if "out" in cfg:
        kw["out"] = cfg["out"]
    if "plots" in cfg:
        kw["plot_dir"] = cfg["plots"]
    return replace(base, **kw)
