import csv
import dataclasses
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from longmem.errors import IoFailure
from longmem.report import (
    BatteryConfig, ReportBundle, SlotError, aggregate, dumps, emit, emit_bundle, load_bundle, run_battery,
    run_many,
)
from longmem.series import FlowKind, SeriesLabel, SignSeries
from longmem.synth import gen_fgn, gen_iid_signs, replica_seeds, signs_of

LABEL = SeriesLabel("EUR/USD", FlowKind.ARRIVAL, ("2010-05-05",))


@pytest.fixture(scope="module")
def fgn_bundle():
    s = signs_of(gen_fgn(2**17, 0.7, 21), LABEL)
    return run_battery(s, seed=5)


def _fake(h_dfa, h_gph, pair="EUR/USD", flow="A", days=("2010-05-05",)):
    lab = SeriesLabel(pair, FlowKind(flow), tuple(days)).as_dict()
    return {"label": lab, "dfa": {"h_hat": h_dfa}, "gph": {"h_hat": h_gph}}


class TestBattery:
    def test_fgn_signs(self, fgn_bundle):
        b = fgn_bundle
        assert b.errors() == {}
        assert 0.62 <= b.dfa.h_hat <= 0.78
        andrews = [r for r in b.lo if r.q_source.value == "andrews"]
        assert len(andrews) == 1 and andrews[0].reject_5pct
        assert [r.n_breaks_hypothesized for r in b.cp] == [0, 1, 2]

    def test_labels_match(self, fgn_bundle):
        b = fgn_bundle
        for name, slot in b.slots().items():
            if hasattr(slot, "label"):
                assert slot.label == b.label, name
        assert all(g.label == b.label for g in b.gph_sweep)

    def test_provenance(self, fgn_bundle):
        p = fgn_bundle.provenance
        for key in ("config_hash", "seed", "rng", "version", "wall_clock_s"):
            assert p[key] not in (None, "")

    def test_constant_series(self):
        b = run_battery(np.ones(5000))
        assert isinstance(b.acf, SlotError) and b.acf.kind == "DegenerateSeries"
        errs = b.errors()
        assert set(errs) == set(b.slots())  # every slot fails, none silently
        assert "NaN" not in b.to_json()

    def test_byte_identical(self):
        s = gen_iid_signs(20_000, 0.5, 3)
        a = run_battery(s, seed=1).to_json(include_timing=False)
        b = run_battery(s, seed=1).to_json(include_timing=False)
        assert a == b

    def test_run_many_matches_serial(self):
        series = [gen_iid_signs(5000, 0.5, ss) for ss in replica_seeds(2, 3)]
        serial = [b.to_json(False) for b in run_many(series, threads=1)]
        pooled = [b.to_json(False) for b in run_many(series, threads=2)]
        assert serial == pooled

    def test_boundary_feeds_r_tilde(self):
        a = signs_of(gen_fgn(4000, 0.6, 1))
        s = SignSeries(a.signs, SeriesLabel("EUR/USD", FlowKind.ARRIVAL, ("2010-05-05", "2010-05-06")), 2000)
        b = run_battery(s)
        assert b.boundary_index == 2000
        assert all(r.r_tilde is not None for r in b.cp if not isinstance(r, SlotError))


class TestConfig:
    def test_hash_tracks_every_field(self):
        base = BatteryConfig()
        changed = {
            "max_lag": 77, "acf_kmin": 51, "acf_fit_kmax": 1999, "blocks": 99, "k_grid": (16, 32),
            "pox_fit_kmin": 1e3, "lo_bandwidths": (0, 5), "lo_andrews": False, "dfa_m_min": 101,
            "dfa_points": 20, "gph_c": "tenth", "gph_sweep": (10, 20), "cp_breaks": (1,),
            "cp_bandwidth": 5, "t2_from_break": False,
        }
        assert set(changed) == {f.name for f in dataclasses.fields(BatteryConfig)}
        hashes = {base.hash()}
        for k, v in changed.items():
            h = dataclasses.replace(base, **{k: v}).hash()
            assert h not in hashes, k
            hashes.add(h)
        assert BatteryConfig().hash() == base.hash()

    def test_from_mapping(self):
        cfg = BatteryConfig.from_mapping({"lo_bandwidths": [0, 10], "blocks": 50})
        assert cfg.lo_bandwidths == (0, 10) and cfg.blocks == 50
        assert BatteryConfig.from_mapping(cfg.as_dict()) == cfg
        with pytest.raises(ValueError):
            BatteryConfig.from_mapping({"nope": 1})


class TestAggregate:
    def test_identical(self):
        rows = aggregate([_fake(0.7, 0.7) for _ in range(30)])
        assert {(r.estimator, r.n) for r in rows} == {("dfa", 30), ("gph", 30)}
        for r in rows:
            assert r.mean == pytest.approx(0.7, abs=1e-15) and r.sd == 0.0

    def test_sample_sd(self):
        rows = {r.estimator: r for r in aggregate([_fake(0.6, 0.6), _fake(0.8, 0.8)])}
        assert rows["dfa"].mean == pytest.approx(0.7, abs=1e-15)
        assert rows["dfa"].sd == pytest.approx(0.1414213562373095, rel=1e-12)

    def test_grouping(self):
        rows = aggregate([_fake(0.6, 0.6), _fake(0.8, 0.8, flow="D"),
                          _fake(0.7, 0.7, days=("2010-05-05", "2010-05-06"))])
        keys = {(r.flow, r.span) for r in rows}
        assert keys == {("A", "intraday"), ("D", "intraday"), ("A", "crossday")}

    def test_needs_two(self):
        with pytest.raises(ValueError):
            aggregate([_fake(0.7, 0.7)])

    def test_errored_slot_skipped(self):
        bad = _fake(0.7, 0.7)
        bad["dfa"] = {"error": {"type": "InsufficientPoints", "message": "x"}}
        rows = {r.estimator: r for r in aggregate([bad, _fake(0.5, 0.5), _fake(0.9, 0.9)])}
        assert rows["dfa"].n == 2 and rows["gph"].n == 3

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(0.01, 0.99), min_size=2, max_size=12), st.randoms())
    def test_permutation_invariant(self, hs, rnd):
        bundles = [_fake(h, 1 - h) for h in hs]
        shuffled = bundles[:]
        rnd.shuffle(shuffled)
        assert aggregate(bundles) == aggregate(shuffled)

    @pytest.mark.slow
    def test_thirty_fgn_days(self):
        days = [f"2010-05-{d:02d}" for d in range(1, 31)]
        bundles = []
        for day, ss in zip(days, replica_seeds(30, 30)):
            lab = SeriesLabel("EUR/USD", FlowKind.ARRIVAL, (day,))
            bundles.append(run_battery(gen_fgn(2**17, 0.7, ss), BatteryConfig(cp_breaks=(), lo_bandwidths=())))
            bundles[-1].label = lab
        for r in aggregate(bundles):
            assert 0.66 <= r.mean <= 0.74, r
            assert r.sd <= 0.06, r


class TestEmit:
    def test_json_round_trip(self, fgn_bundle, tmp_path):
        paths = emit(fgn_bundle, tmp_path, name="b", include_timing=False)
        text = paths[0].read_text()
        assert dumps(load_bundle(paths[0])) == text
        assert json.loads(text)["schema_version"] == 1

    def test_pox_csv_full_precision(self, fgn_bundle, tmp_path):
        emit_bundle(fgn_bundle, tmp_path, "b")
        with open(tmp_path / "b_pox.csv") as fh:
            rows = list(csv.DictReader(fh))
        pp = fgn_bundle.pox
        assert [int(r["k"]) for r in rows] == pp.k_grid.tolist()
        assert [float(r["r_bar"]) for r in rows] == pp.r_bar.tolist()

    def test_missing_directory(self, fgn_bundle, tmp_path):
        missing = tmp_path / "nope"
        with pytest.raises(IoFailure) as info:
            emit(fgn_bundle, missing)
        assert str(missing) in str(info.value)

    def test_table(self, tmp_path):
        (path,) = emit(aggregate([_fake(0.6, 0.6), _fake(0.8, 0.8)]), tmp_path)
        lines = path.read_text().splitlines()
        assert lines[0] == "pair,flow,span,estimator,n,mean,sd"
        assert len(lines) == 3
