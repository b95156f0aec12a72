"""``msdg`` command line: run, sweep, reference, report."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from ..basis import DEFAULT_PPW, SpaceKind
from ..coefficients import field_from_case
from ..solution import ReferenceMismatch, cached_reference, default_reference_elements, reference_filename
from . import io as hio
from .experiment import (
    PRESETS,
    SPIKE_FACTOR,
    SPIKE_WINDOW,
    CasePoint,
    SweepSpec,
    convergence_rates,
    group_records,
    resonance_report,
    run_case,
    run_sweep,
)

SPACE_CHOICES = ("E1", "E2", "E3", "T3", "T5", "P3")
ENV_CACHE = "MSDG_REF_CACHE"

log = logging.getLogger("msdg")


def _common(p: argparse.ArgumentParser, lists: bool):
    many = "comma-separated list" if lists else None
    p.add_argument("--fcase", default=None, help="const10, sinp2 or a numpy expression in x")
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--eps", default=None, help=many)
    p.add_argument("--alpha", default=None, help=many)
    p.add_argument("--beta", default=None, help=many)
    p.add_argument("--gamma", type=float, default=None, help="boundary weight in (0,1), default 0.5")
    p.add_argument("--cond", choices=("auto", "dense", "onenorm"), default=None)
    p.add_argument("--quad-ppw", type=float, default=None, help=f"quadrature points per wavelength (default {DEFAULT_PPW:g})")
    p.add_argument("--n-ref", type=int, default=None, help="reference fine-mesh size")
    p.add_argument("--ref-cache", default=os.environ.get(ENV_CACHE), help=f"reference cache directory (env {ENV_CACHE})")
    p.add_argument("--out", default=None, help="CSV output path (stdout when omitted)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="msdg", description="Multiscale DG experiments for -eps^2 u'' - f u = 0.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="single case")
    p.add_argument("--space", choices=SPACE_CHOICES, default="E1")
    p.add_argument("--nelems", type=int, required=True)
    _common(p, lists=False)

    p = sub.add_parser("sweep", help="Cartesian sweep from a config file and/or flags")
    p.add_argument("--config", help="flat key = value file")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--space", default=None, help="comma-separated list")
    p.add_argument("--nelems", default=None, help="list with ranges lo:hi[:step]")
    p.add_argument("--plots", default=None, help="directory for plot data and figures")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timings", action="store_true", help="record wall times (CSV no longer reproducible)")
    _common(p, lists=True)

    p = sub.add_parser("reference", help="build or load a cached reference solution")
    p.add_argument("--fcase", default="sinp2")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--n-ref", type=int, default=None)
    p.add_argument("--ref-cache", default=os.environ.get(ENV_CACHE))

    p = sub.add_parser("report", help="rates and resonance spikes from a sweep CSV")
    p.add_argument("csv")
    p.add_argument("--plots", default=None, help="directory for plot data and figures")
    p.add_argument("--spike-factor", type=float, default=SPIKE_FACTOR)
    p.add_argument("--window", type=int, default=SPIKE_WINDOW)
    return parser


def _emit(records, out, timings=False):
    if out:
        hio.write_csv(records, out, timings)
        log.info("wrote %d records to %s", len(records), out)
    else:
        sys.stdout.write(hio.format_csv(records, timings))


def _plots(records, directory):
    from .plotting import render_figures

    data = hio.emit_plot_data(records, directory)
    figs = render_figures(records, directory)
    log.info("wrote %d plot-data files and %d figures to %s", len(data), len(figs), directory)


def cmd_run(args):
    f = field_from_case(args.fcase or "const10")
    point = CasePoint(
        f=f,
        eps=float(args.eps or 0.005),
        space=SpaceKind.parse(args.space),
        N=args.nelems,
        alpha=float(args.alpha or 0.0),
        beta=float(args.beta if args.beta is not None else (args.alpha or 0.0)),
        gamma=0.5 if args.gamma is None else args.gamma,
        a=0.0 if args.a is None else args.a,
        b=1.0 if args.b is None else args.b,
        ppw=args.quad_ppw or DEFAULT_PPW,
        cond_method=args.cond or "auto",
        N_ref=args.n_ref,
    )
    rec = run_case(point, args.ref_cache)
    _emit([rec], args.out)
    return 0


def sweep_spec_from_args(args) -> SweepSpec:
    spec = PRESETS[args.preset]() if args.preset else SweepSpec()
    cfg = hio.read_config(args.config) if args.config else {}
    flags = {
        "fcase": args.fcase, "a": args.a, "b": args.b, "eps": args.eps, "space": args.space,
        "alpha": args.alpha, "beta": args.beta, "gamma": args.gamma, "nelems": args.nelems,
        "cond": args.cond, "quad_ppw": args.quad_ppw, "n_ref": args.n_ref, "out": args.out, "plots": args.plots,
    }
    cfg.update({k: str(v) for k, v in flags.items() if v is not None})
    if args.ref_cache is None and "ref_cache" in cfg:
        args.ref_cache = cfg["ref_cache"]
    if "workers" in cfg and args.workers == 1:
        args.workers = int(cfg["workers"])
    spec = hio.spec_from_mapping({k: v for k, v in cfg.items() if k not in ("ref_cache", "workers")}, spec)
    if not spec.N:
        raise ValueError("no element counts given (use --nelems, a config 'nelems' key or --preset)")
    return spec


def cmd_sweep(args):
    spec = sweep_spec_from_args(args)

    def progress(i, n, rec):
        log.info("[%d/%d] %s eps=%g a=%g b=%g N=%d err=%.3e cond=%.3e", i, n, rec.space, rec.eps,
                 rec.alpha, rec.beta, rec.N, rec.l2_error_u, rec.condition.value)

    records = run_sweep(spec, args.ref_cache, workers=args.workers, progress=progress)
    _emit(records, spec.out, args.timings)
    if spec.plot_dir:
        _plots(records, spec.plot_dir)
    return 0


def cmd_reference(args):
    if not args.ref_cache:
        raise ValueError(f"a cache directory is required (--ref-cache or {ENV_CACHE})")
    f = field_from_case(args.fcase)
    n_ref = args.n_ref or default_reference_elements(args.eps)
    ref = cached_reference(args.ref_cache, f, args.eps, n_ref, args.a, args.b, args.gamma)
    path = os.path.join(args.ref_cache, reference_filename(f, args.eps, n_ref, args.a, args.b, args.gamma))
    print(path)
    for k, v in sorted(ref.metadata.items()):
        print(f"  {k} = {v}")
    return 0


def format_report(records, spike_factor=SPIKE_FACTOR, window=SPIKE_WINDOW) -> str:
    lines = []
    for key, recs in sorted(group_records(records).items()):
        space, eps, alpha, beta, gamma = key
        lines.append(f"{space} eps={eps:g} alpha={alpha:g} beta={beta:g} gamma={gamma:g}")
        for pair in convergence_rates(recs):
            flag = "" if pair.reliable else "  (round-off, unreliable)"
            lines.append(f"  rate N={pair.N1}->{pair.N2}: {pair.rate:.3f}{flag}")
        if len(recs) >= 5:
            for what in ("error", "cond"):
                spikes = resonance_report(recs, spike_factor, window, key=what)
                peaks = ", ".join(f"N={s.peak} (x{s.ratio:.1f})" for s in spikes) or "none"
                lines.append(f"  {what} spikes: {peaks}")
    return "\n".join(lines) + "\n"


def cmd_report(args):
    records = hio.read_csv(args.csv)
    sys.stdout.write(format_report(records, args.spike_factor, args.window))
    if args.plots:
        _plots(records, args.plots)
    return 0


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "reference": cmd_reference, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ValueError, ReferenceMismatch, OSError) as exc:
        print(f"msdg: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
