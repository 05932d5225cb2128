"""Run the full estimator battery over series and serialise the results."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from . import __version__
from .acf import as_float_array, label_of, loglog_slope, sample_acf
from .changepoint import berkes_test
from .errors import DegenerateSeries, IoFailure
from .rescaled_range import DEFAULT_LO_BANDWIDTHS, lo_test, pox_plot
from .scaling import dfa_estimate, default_m_grid, gph_estimate, gph_sweep
from .series import SeriesLabel, SignSeries
from .synth import RNG_ALGORITHM

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class BatteryConfig:
    """Analysis parameters; every field feeds the config hash."""

    max_lag: int | None = None
    acf_kmin: int = 50
    acf_fit_kmax: int = 2000
    blocks: int = 100
    k_grid: tuple[int, ...] | None = None
    pox_fit_kmin: float = 1e4
    lo_bandwidths: tuple[int, ...] = DEFAULT_LO_BANDWIDTHS
    lo_andrews: bool = True
    dfa_m_min: int = 100
    dfa_points: int = 24
    gph_c: str | int = "sqrt"
    gph_sweep: tuple[int, ...] | None = None
    cp_breaks: tuple[int, ...] = (0, 1, 2)
    cp_bandwidth: str | int = "andrews"
    t2_from_break: bool = True

    @classmethod
    def from_mapping(cls, d: Mapping[str, Any]) -> "BatteryConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kw = {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}
        return cls(**kw)

    def as_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in dataclasses.asdict(self).items()}

    def hash(self) -> str:
        blob = json.dumps(jsonable(self.as_dict()), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class SlotError:
    kind: str
    message: str

    @classmethod
    def of(cls, exc: Exception) -> "SlotError":
        return cls(type(exc).__name__, str(exc))


@dataclass(frozen=True)
class SeriesSummary:
    n: int
    pct_sell: float | None  # sign series only
    mean: float


@dataclass
class ReportBundle:
    label: SeriesLabel | None
    boundary_index: int | None
    summary: SeriesSummary
    acf: Any
    acf_slope: Any
    pox: Any
    lo: list
    dfa: Any
    gph: Any
    gph_sweep: Any
    cp: list
    provenance: dict = field(default_factory=dict)

    def slots(self) -> dict[str, Any]:
        out = {"acf": self.acf, "acf_slope": self.acf_slope, "pox": self.pox, "dfa": self.dfa,
               "gph": self.gph, "gph_sweep": self.gph_sweep}
        out.update({f"lo[{i}]": r for i, r in enumerate(self.lo)})
        out.update({f"cp[{i}]": r for i, r in enumerate(self.cp)})
        return out

    def errors(self) -> dict[str, SlotError]:
        return {k: v for k, v in self.slots().items() if isinstance(v, SlotError)}

    def to_dict(self, include_timing: bool = True) -> dict:
        d = {
            "schema_version": SCHEMA_VERSION,
            "label": self.label.as_dict() if self.label else None,
            "boundary_index": self.boundary_index,
            "summary": self.summary,
            "acf": self.acf,
            "acf_slope": self.acf_slope,
            "pox": self.pox,
            "lo": self.lo,
            "dfa": self.dfa,
            "gph": self.gph,
            "gph_sweep": self.gph_sweep,
            "cp": self.cp,
            "provenance": dict(self.provenance),
        }
        if not include_timing:
            d["provenance"].pop("wall_clock_s", None)
        return jsonable(d)

    def to_json(self, include_timing: bool = True) -> str:
        return dumps(self.to_dict(include_timing))


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=False) + "\n"


def jsonable(obj):
    """Convert results (dataclasses, arrays, enums) into plain JSON values."""
    if isinstance(obj, SlotError):
        return {"error": {"type": obj.kind, "message": obj.message}}
    if isinstance(obj, SeriesLabel):
        return obj.as_dict()
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        d = {f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)}
        if hasattr(obj, "t1") and "t_stats" in d:
            d["t1"], d["t2"] = obj.t1, obj.t2
        if "label" in d:
            del d["label"]  # carried once at bundle level
        return {k: jsonable(v) for k, v in d.items()}
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, Mapping):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _slot(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (ValueError, ArithmeticError) as exc:
        return SlotError.of(exc)


def _stamp(result, label):
    """Attach the bundle label to an estimator result (arrays are shared, not copied)."""
    if dataclasses.is_dataclass(result) and hasattr(result, "label"):
        return dataclasses.replace(result, label=label)
    return result


def _summary(series) -> SeriesSummary:
    x = as_float_array(series)
    pct = None
    if isinstance(series, SignSeries):
        pct = 100.0 * int(np.count_nonzero(series.signs == 1)) / len(series)
    return SeriesSummary(x.size, pct, float(np.mean(x)))


def run_battery(series, config: BatteryConfig | None = None, seed: int = 0) -> ReportBundle:
    """Every estimator and test on one series; failures are recorded per slot."""
    cfg = config or BatteryConfig()
    t0 = time.perf_counter()
    x = as_float_array(series)

    acf = _slot(sample_acf, x, cfg.max_lag)
    acf_slope = acf if isinstance(acf, SlotError) else _slot(loglog_slope, acf, cfg.acf_kmin, cfg.acf_fit_kmax)
    pox = _slot(pox_plot, x, cfg.blocks, cfg.k_grid, (cfg.pox_fit_kmin, math.inf))

    lo = []
    autocov = None if isinstance(acf, SlotError) else acf.gamma_hat
    bandwidths: list[int | str] = list(cfg.lo_bandwidths) + (["andrews"] if cfg.lo_andrews else [])
    for q in bandwidths:
        lo.append(_slot(lo_test, x, q, autocov))

    dfa = _slot(_dfa, x, cfg)
    gph = _slot(gph_estimate, x, cfg.gph_c)
    sweep = _slot(gph_sweep, x, cfg.gph_sweep)

    r_star = series.boundary_index if isinstance(series, SignSeries) else None
    cp = [_slot(berkes_test, x, k, cfg.cp_bandwidth, r_star, cfg.t2_from_break) for k in cfg.cp_breaks]

    provenance = {
        "config_hash": cfg.hash(),
        "config": cfg.as_dict(),
        "seed": int(seed),
        "rng": RNG_ALGORITHM,
        "version": __version__,
        "wall_clock_s": round(time.perf_counter() - t0, 3),
    }
    label = label_of(series)
    if not isinstance(sweep, SlotError):
        sweep = [_stamp(g, label) for g in sweep]
    return ReportBundle(label, r_star, _summary(series), _stamp(acf, label), acf_slope, _stamp(pox, label),
                        [_stamp(r, label) for r in lo], _stamp(dfa, label), _stamp(gph, label), sweep,
                        [_stamp(r, label) for r in cp], provenance)


def _dfa(x: np.ndarray, cfg: BatteryConfig):
    if x.min() == x.max():
        raise DegenerateSeries("series is constant; fluctuation function vanishes")
    return dfa_estimate(x, default_m_grid(x.size, cfg.dfa_points), cfg.dfa_m_min)


def _run_one(args):
    series, cfg, seed = args
    return run_battery(series, cfg, seed)


def run_many(series_list: Sequence, config: BatteryConfig | None = None, seed: int = 0,
             threads: int = 1) -> list[ReportBundle]:
    """Battery over many series; output order follows input order."""
    jobs = [(s, config, seed) for s in series_list]
    if threads <= 1 or len(jobs) <= 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_run_one, jobs))


# ---------------------------------------------------------------- aggregation

@dataclass(frozen=True)
class AggregateRow:
    pair: str
    flow: str
    span: str
    estimator: str
    n: int
    mean: float
    sd: float


def _bundle_dict(b) -> dict:
    return b.to_dict(include_timing=False) if isinstance(b, ReportBundle) else b


def aggregate(bundles: Iterable) -> list[AggregateRow]:
    """Mean and sample standard deviation (n-1) of H estimates per group.

    Groups are (pair, flow kind, span); bundles may be ``ReportBundle``
    objects or their parsed JSON. Errored estimator slots are skipped.
    """
    dicts = [_bundle_dict(b) for b in bundles]
    if len(dicts) < 2:
        raise ValueError("aggregation needs at least two bundles")
    groups: dict[tuple, dict[str, list[float]]] = {}
    for d in dicts:
        lab = d.get("label") or {}
        key = (lab.get("pair", ""), lab.get("flow", ""), lab.get("span", ""))
        g = groups.setdefault(key, {"dfa": [], "gph": []})
        for est in ("dfa", "gph"):
            slot = d.get(est) or {}
            if "h_hat" in slot and slot["h_hat"] is not None:
                g[est].append(slot["h_hat"])
    rows = []
    for key in sorted(groups):
        for est in ("dfa", "gph"):
            vals = groups[key][est]
            if not vals:
                continue
            mean = float(statistics.mean(vals))  # exact rational sum: order-independent
            sd = float(statistics.stdev(vals)) if len(vals) > 1 else math.nan
            rows.append(AggregateRow(*key, est, len(vals), mean, sd))
    return rows


# ---------------------------------------------------------------- output

def _csv_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    def fmt(v):
        if v is None:
            return ""
        if isinstance(v, (bool, np.bool_)):
            return "true" if v else "false"
        if isinstance(v, (float, np.floating)):
            return repr(float(v))
        return str(v)

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    return path


def _check_dir(sink) -> Path:
    p = Path(sink)
    if not p.is_dir():
        raise IoFailure(p, "output directory does not exist")
    return p


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    if not path.parent.is_dir():
        raise IoFailure(path.parent, "output directory does not exist")
    try:
        return _csv_rows(path, header, rows)
    except OSError as exc:
        raise IoFailure(path, exc.strerror or str(exc)) from exc


def lo_rows(results) -> list[list]:
    return [[r.q, r.phi_hat, r.sigma_hat, r.v, r.reject_5pct] for r in results if not isinstance(r, SlotError)]


def cp_rows(results) -> list[list]:
    return [[";".join(map(str, r.r_hat)), r.r_tilde, r.t1, r.t2, r.m_stat, r.reject_1pct]
            for r in results if not isinstance(r, SlotError)]


LO_HEADER = ("q", "phi_hat", "sigma_hat", "v", "reject")
CP_HEADER = ("r_hat", "r_tilde", "t1", "t2", "m", "reject")
GPH_HEADER = ("c", "beta_hat", "h_hat", "stderr")
POX_HEADER = ("k", "r_bar", "n_anchors")
ACF_HEADER = ("lag", "gamma", "rho")
AGG_HEADER = ("pair", "flow", "span", "estimator", "n", "mean", "sd")


def emit_bundle(bundle: ReportBundle, sink, name: str | None = None, include_timing: bool = True) -> list[Path]:
    """Write ``<name>.json`` plus plot-data CSVs into the directory ``sink``."""
    out = _check_dir(sink)
    name = name or (bundle.label.slug() if bundle.label else "series")
    paths = []
    try:
        p = out / f"{name}.json"
        p.write_text(bundle.to_json(include_timing))
        paths.append(p)
        if not isinstance(bundle.acf, SlotError):
            a = bundle.acf
            paths.append(_csv_rows(out / f"{name}_acf.csv", ACF_HEADER,
                                   zip(a.lags(), a.gamma_hat, a.rho_hat)))
        if not isinstance(bundle.pox, SlotError):
            pp = bundle.pox
            paths.append(_csv_rows(out / f"{name}_pox.csv", POX_HEADER,
                                   zip(pp.k_grid, pp.r_bar, pp.n_anchors)))
        if not isinstance(bundle.dfa, SlotError):
            d = bundle.dfa
            paths.append(_csv_rows(out / f"{name}_dfa.csv", ("m", "F"), zip(d.m_grid, d.f_of_m)))
        if not isinstance(bundle.gph_sweep, SlotError):
            paths.append(_csv_rows(out / f"{name}_gph_sweep.csv", GPH_HEADER,
                                   [[g.c, g.beta_hat, g.h_hat, g.fit_stderr] for g in bundle.gph_sweep]))
        paths.append(_csv_rows(out / f"{name}_lo.csv", LO_HEADER, lo_rows(bundle.lo)))
        paths.append(_csv_rows(out / f"{name}_cp.csv", CP_HEADER, cp_rows(bundle.cp)))
    except OSError as exc:
        raise IoFailure(out, exc.strerror or str(exc)) from exc
    return paths


def emit_table(rows: Sequence[AggregateRow], sink, name: str = "aggregate") -> Path:
    out = _check_dir(sink)
    return write_csv(out / f"{name}.csv", AGG_HEADER, [dataclasses.astuple(r) for r in rows])


def emit(obj, sink, **kwargs) -> list[Path]:
    """Write a bundle or an aggregate table to the directory ``sink``."""
    if isinstance(obj, ReportBundle):
        return emit_bundle(obj, sink, **kwargs)
    return [emit_table(list(obj), sink, **kwargs)]


def load_bundle(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise IoFailure(path, exc.strerror or str(exc)) from exc
