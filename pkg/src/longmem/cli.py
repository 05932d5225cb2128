"""``longmem`` command-line interface.

Exit status: 0 on success, 1 when a battery finished with per-slot errors,
2 on any fatal error.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .acf import loglog_slope, sample_acf
from .changepoint import berkes_test, null_ecdf
from .errors import IoFailure, LabelMismatch, LongMemError, TooShort
from .report import (
    CP_HEADER, GPH_HEADER, LO_HEADER, POX_HEADER, BatteryConfig, aggregate, cp_rows, emit_bundle,
    emit_table, load_bundle, lo_rows, run_many, write_csv,
)
from .rescaled_range import lo_test, pox_plot
from .scaling import DEFAULT_M_MIN, dfa_estimate, gph_estimate
from .series import (
    FlowKind, SeriesLabel, SignSeries, build_cross_day, build_sign_series, filter_session,
    group_keys, read_events, read_series, summary_stats, write_series,
)
from .synth import GenSpec, gen_ar1, gen_fgn, gen_iid_signs, gen_mean_shift, signs_of

log = logging.getLogger("longmem")


class Fatal(Exception):
    pass


def _out_path(args, default_name: str) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    return Path(args.out_dir) / default_name


def _load(path, rstar=None):
    return read_series(path, boundary_index=rstar)


def _parse_session(text: str) -> tuple[dt.time, dt.time]:
    a, b = text.split("-")
    return dt.time.fromisoformat(a), dt.time.fromisoformat(b)


def _parse_grid(spec: str, n: int) -> np.ndarray:
    """``log:LO:HI:COUNT`` where HI may be written ``N/<d>``; or a comma list."""
    if not spec.startswith("log:"):
        return np.array([int(v) for v in spec.split(",")], dtype=np.int64)
    _, lo, hi, count = spec.split(":")
    hi_val = n // int(hi.split("/")[1]) if hi.startswith("N/") else int(hi)
    return np.unique(np.round(np.geomspace(int(lo), hi_val, int(count))).astype(np.int64))


def _bandwidth(text: str):
    return "andrews" if text == "andrews" else int(text)


# ---------------------------------------------------------------- commands

def cmd_ingest(args, cfg):
    events = filter_session(read_events(args.events), *_parse_session(args.session))
    rows = []
    for pair, day in group_keys(events):
        try:
            arr = build_sign_series(events, FlowKind.ARRIVAL, pair, day)
            dep = build_sign_series(events, FlowKind.DEPARTURE, pair, day)
        except TooShort as exc:
            log.warning("skipping %s %s: %s", pair, day, exc)
            continue
        s = summary_stats(arr, dep)
        rows.append([pair, day, s.n_arrivals, s.n_departures, s.pct_sell_arrivals, s.pct_sell_departures])
    write_csv(_out_path(args, "summary.csv"),
              ("pair", "day", "n_arrivals", "n_departures", "pct_sell_arrivals", "pct_sell_departures"), rows)
    return 0


def cmd_signs(args, cfg):
    out = Path(args.out_dir)
    if not out.is_dir():
        raise IoFailure(out, "output directory does not exist")
    events = filter_session(read_events(args.events), *_parse_session(args.session))
    manifest = []
    by_key: dict[tuple[str, FlowKind], list[SignSeries]] = {}
    for pair, day in group_keys(events):
        for kind in FlowKind:
            try:
                s = build_sign_series(events, kind, pair, day)
            except TooShort as exc:
                log.warning("skipping: %s", exc)
                continue
            by_key.setdefault((pair, kind), []).append(s)
    series = [s for group in by_key.values() for s in group]
    if args.crossday:
        for group in by_key.values():
            group.sort(key=lambda s: s.label.days[0])
            for a, b in zip(group, group[1:]):
                try:
                    series.append(build_cross_day(a, b))
                except LabelMismatch as exc:
                    log.info("no cross-day series: %s", exc)
    for s in series:
        name = f"{s.label.slug()}.csv"
        write_series(out / name, s)
        manifest.append({"file": name, "label": s.label.as_dict(), "boundary_index": s.boundary_index})
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    return 0


def cmd_acf(args, cfg):
    s = _load(args.series)
    est = sample_acf(s, args.max_lag)
    write_csv(_out_path(args, "acf.csv"), ("lag", "gamma", "rho"), zip(est.lags(), est.gamma_hat, est.rho_hat))
    try:
        fit = loglog_slope(est, args.kmin, args.kmax)
        print(f"loglog slope over [{args.kmin}, {args.kmax}]: {fit.slope:.4f} (stderr {fit.stderr:.4f})")
    except ValueError as exc:
        log.warning("no log-log fit: %s", exc)
    return 0


def cmd_rs(args, cfg):
    x = _load(args.series)
    n = len(x)
    grid = None if args.kgrid == "pow2" else _parse_grid(args.kgrid, n)
    pp = pox_plot(x, args.blocks, grid, (args.fit_kmin, np.inf))
    write_csv(_out_path(args, "pox.csv"), POX_HEADER, zip(pp.k_grid, pp.r_bar, pp.n_anchors))
    if pp.slope_hat is not None:
        print(f"pox slope (k >= {args.fit_kmin:g}): {pp.slope_hat:.4f}")
    return 0


def cmd_lo(args, cfg):
    x = _load(args.series)
    results = [lo_test(x, _bandwidth(q)) for q in args.q]
    write_csv(_out_path(args, "lo.csv"), LO_HEADER, lo_rows(results))
    return 0


def cmd_dfa(args, cfg):
    x = _load(args.series)
    grid = _parse_grid(args.grid, len(x))
    res = dfa_estimate(x, grid, args.mmin)
    rows = [[m, f] for m, f in zip(res.m_grid, res.f_of_m)] + [["h_hat", res.h_hat]]
    write_csv(_out_path(args, "dfa.csv"), ("m", "F"), rows)
    return 0


def cmd_gph(args, cfg):
    x = _load(args.series)
    c = args.c if args.c in ("sqrt", "tenth") else int(args.c)
    g = gph_estimate(x, c)
    write_csv(_out_path(args, "gph.csv"), GPH_HEADER, [[g.c, g.beta_hat, g.h_hat, g.fit_stderr]])
    return 0


def cmd_cp(args, cfg):
    x = _load(args.series)
    res = berkes_test(x, args.breaks, _bandwidth(args.q), args.rstar, not args.t2_after_break)
    write_csv(_out_path(args, "cp.csv"), CP_HEADER, cp_rows([res]))
    return 0


def cmd_cp_null(args, cfg):
    e = null_ecdf(args.n_series, args.length, args.seed)
    write_csv(_out_path(args, "cp_null.csv"), ("r_tilde", "cum_prob"), zip(e.values, e.cum_prob))
    return 0


def cmd_synth(args, cfg):
    n, seed = args.n, args.seed
    if args.kind == "iid":
        out = gen_iid_signs(n, args.p_sell, seed)
    elif args.kind == "ar1":
        out = gen_ar1(n, args.phi, args.sigma, seed)
    elif args.kind == "fgn":
        out = gen_fgn(n, args.H, seed)
    else:
        base = GenSpec("ar1", n, phi=args.phi, sigma_eps=args.sigma)
        out = gen_mean_shift(n, args.rstar, args.mu, base, seed)
    if args.signs and not isinstance(out, SignSeries):
        out = signs_of(out)
    write_series(_out_path(args, "synth.csv"), out)
    return 0


def _battery_inputs(args):
    items = []
    if args.manifest:
        root = Path(args.manifest).parent
        for entry in json.loads(Path(args.manifest).read_text()):
            s = read_series(root / entry["file"], SeriesLabel.from_dict(entry["label"]),
                            entry.get("boundary_index"))
            items.append((Path(entry["file"]).stem, s))
    for p in args.series:
        items.append((Path(p).stem, read_series(p)))
    if not items:
        raise Fatal("no input series given")
    return items


def cmd_battery(args, cfg):
    out = Path(args.out_dir)
    if not out.is_dir():
        raise IoFailure(out, "output directory does not exist")
    items = _battery_inputs(args)
    bundles = run_many([s for _, s in items], cfg, args.seed, args.threads)
    status = 0
    for (name, _), b in zip(items, bundles):
        emit_bundle(b, out, name, include_timing=not args.no_timing)
        errs = b.errors()
        if errs:
            status = 1
            for slot, e in errs.items():
                log.warning("%s: %s failed: %s: %s", name, slot, e.kind, e.message)
    return status


def cmd_aggregate(args, cfg):
    rows = aggregate([load_bundle(p) for p in args.bundles])
    out = _out_path(args, "aggregate.csv")
    emit_table(rows, out.parent, out.stem)
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    def global_flags(suppress: bool) -> argparse.ArgumentParser:
        # accepted before or after the subcommand; the subcommand copy must not reset defaults
        g = argparse.ArgumentParser(add_help=False)
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        g.add_argument("--config", default=d(None), help="JSON file of battery parameters")
        g.add_argument("--seed", type=int, default=d(0))
        g.add_argument("--threads", type=int, default=d(1))
        g.add_argument("--out-dir", default=d("."))
        g.add_argument("-v", "--verbose", action="store_true", default=d(False))
        return g

    common = global_flags(suppress=True)
    p = argparse.ArgumentParser(prog="longmem", description=__doc__.splitlines()[0], parents=[global_flags(False)])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_, parents=[common])
        sp.set_defaults(func=fn)
        return sp

    sp = add("ingest", cmd_ingest, "per-(pair, day) summary statistics of an event log")
    sp.add_argument("events")
    sp.add_argument("--session", default="08:00:00-17:00:00")
    sp.add_argument("--out")

    sp = add("signs", cmd_signs, "write intra-day (and cross-day) sign series plus a manifest")
    sp.add_argument("events")
    sp.add_argument("--session", default="08:00:00-17:00:00")
    sp.add_argument("--crossday", action="store_true")

    sp = add("acf", cmd_acf, "sample autocorrelation")
    sp.add_argument("series")
    sp.add_argument("--max-lag", type=int)
    sp.add_argument("--kmin", type=int, default=50)
    sp.add_argument("--kmax", type=int, default=2000)
    sp.add_argument("--out")

    sp = add("rs", cmd_rs, "rescaled-range (pox) plot data")
    sp.add_argument("series")
    sp.add_argument("--blocks", type=int, default=100)
    sp.add_argument("--kgrid", default="pow2", help="pow2, log:LO:HI:COUNT or a comma list")
    sp.add_argument("--fit-kmin", type=float, default=1e4)
    sp.add_argument("--out")

    sp = add("lo", cmd_lo, "Lo's modified rescaled-range test")
    sp.add_argument("series")
    sp.add_argument("--q", nargs="+", default=["andrews"], help="bandwidths: integers and/or 'andrews'")
    sp.add_argument("--out")

    sp = add("dfa", cmd_dfa, "detrended fluctuation analysis")
    sp.add_argument("series")
    sp.add_argument("--mmin", type=int, default=DEFAULT_M_MIN)
    sp.add_argument("--grid", default="log:10:N/4:24")
    sp.add_argument("--out")

    sp = add("gph", cmd_gph, "log-periodogram regression")
    sp.add_argument("series")
    sp.add_argument("--c", default="sqrt", help="sqrt, tenth or an integer")
    sp.add_argument("--out")

    sp = add("cp", cmd_cp, "Berkes' change-point test")
    sp.add_argument("series")
    sp.add_argument("--breaks", type=int, choices=(0, 1, 2), default=1)
    sp.add_argument("--q", default="andrews")
    sp.add_argument("--rstar", type=int)
    sp.add_argument("--t2-after-break", action="store_true",
                    help="start second-segment sums one past the estimated break")
    sp.add_argument("--out")

    sp = add("cp-null", cmd_cp_null, "null ECDF of the normalised change-point score")
    sp.add_argument("--n-series", type=int, default=1000)
    sp.add_argument("--length", type=int, default=100_000)
    sp.add_argument("--out")

    sp = add("synth", cmd_synth, "generate a synthetic series")
    sp.add_argument("--kind", choices=("iid", "ar1", "fgn", "shift"), default="fgn")
    sp.add_argument("--n", type=int, default=131072)
    sp.add_argument("--H", type=float, default=0.7)
    sp.add_argument("--phi", type=float, default=0.0)
    sp.add_argument("--sigma", type=float, default=1.0)
    sp.add_argument("--p-sell", type=float, default=0.5)
    sp.add_argument("--rstar", type=int)
    sp.add_argument("--mu", type=float, default=1.0)
    sp.add_argument("--signs", action="store_true", help="threshold at zero and write index,sign")
    sp.add_argument("--out")

    sp = add("battery", cmd_battery, "run every estimator and write bundles")
    sp.add_argument("series", nargs="*")
    sp.add_argument("--manifest")
    sp.add_argument("--no-timing", action="store_true", help="omit wall-clock from bundles")

    sp = add("aggregate", cmd_aggregate, "mean/sd of H estimates across bundles")
    sp.add_argument("bundles", nargs="+")
    sp.add_argument("--out")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = BatteryConfig()
        if args.config:
            cfg = BatteryConfig.from_mapping(json.loads(Path(args.config).read_text()))
        if args.command == "synth" and args.kind == "shift" and args.rstar is None:
            args.rstar = args.n // 2
        return args.func(args, cfg)
    except (LongMemError, Fatal, OSError, ValueError, KeyError) as exc:
        print(f"longmem: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
