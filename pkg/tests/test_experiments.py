"""Experiment harness tests: seeds, CSV contract, phase diagram."""
import math
import os

import numpy as np
import pytest

from specdetect.errors import InvalidGrid, InvalidSpec
from specdetect.experiments import (
    COLUMNS,
    ExperimentConfig,
    derive_seed,
    emit_phase_diagram,
    figure_preset,
    run_experiment,
    splitmix64,
    write_csv,
)
from specdetect.graphs import Regular
from specdetect.operators import LaplacianKind


def _point(gamma, spec=Regular(3), p1=0.5, lap=LaplacianKind.UNNORMALIZED):
    return {"spec": spec, "p1": p1, "gamma": gamma, "laplacian": lap, "delta": None}


class TestSeeds:
    def test_splitmix_deterministic(self):
        assert splitmix64(42) == splitmix64(42)
        assert splitmix64(42) != splitmix64(43)
        assert 0 <= splitmix64(10**18) < 2**64

    def test_derive_seed_isolated_rows(self):
        s = derive_seed(7, 3, 11)
        assert s == derive_seed(7, 3, 11)
        assert s != derive_seed(7, 3, 12)
        assert s != derive_seed(7, 4, 11)
        assert s != derive_seed(8, 3, 11)

    def test_index_order_matters(self):
        assert derive_seed(0, 1, 2) != derive_seed(0, 2, 1)


class TestPhaseDiagram:
    def test_anchor_cbar6(self):
        row = emit_phase_diagram([6.0])[0]
        assert row["delta_ema"] == pytest.approx(5.366563, abs=5e-7)
        assert row["delta_ultimate"] == pytest.approx(4.898979, abs=5e-7)
        assert row["delta_max"] == 12.0

    def test_anchor_cbar2(self):
        row = emit_phase_diagram([2.0])[0]
        assert row["delta_ema"] == pytest.approx(4.0, rel=1e-12)
        assert row["delta_ultimate"] == pytest.approx(2 * math.sqrt(2), rel=1e-12)

    def test_gap_ratio_closes(self):
        rows = emit_phase_diagram([2.0, 10.0, 1e6])
        ratios = [r["delta_ema"] / r["delta_ultimate"] for r in rows]
        for r, cbar in zip(ratios, (2.0, 10.0, 1e6)):
            assert r == pytest.approx(math.sqrt(cbar / (cbar - 1)), rel=1e-12)
        assert ratios[-1] == pytest.approx(1.0, abs=1e-5)

    def test_invalid_grid(self):
        with pytest.raises(InvalidGrid):
            emit_phase_diagram([])
        with pytest.raises(InvalidGrid):
            emit_phase_diagram([0.5, 6.0])

    def test_csv_output(self, tmp_path):
        out = tmp_path / "phase.csv"
        emit_phase_diagram([2.0, 6.0], out=str(out))
        lines = out.read_text().splitlines()
        assert lines[0] == "cbar,delta_ema,delta_ultimate,delta_max"
        assert len(lines) == 3


class TestRunExperiment:
    def test_records_and_summary(self, tmp_path):
        out = tmp_path / "run.csv"
        cfg = ExperimentConfig(
            experiment="custom",
            points=[_point(0.06), _point(0.12)],
            n=400,
            samples=2,
            base_seed=5,
            out=str(out),
        )
        records, summary = run_experiment(cfg)
        assert len(records) == 4
        assert [r["point"] for r in records] == [0, 0, 1, 1]
        assert [r["sample"] for r in records] == [0, 1, 0, 1]
        for r in records:
            assert r["error"] == ""
            assert r["lambda2"] > 0
            assert r["ema_lambda2"] is not None
        assert len(summary) == 2
        assert summary[0]["count"] == 2
        assert out.exists()

    def test_byte_identical_reruns(self, tmp_path):
        outs = []
        for name in ("a.csv", "b.csv"):
            out = tmp_path / name
            cfg = ExperimentConfig(
                experiment="custom",
                points=[_point(0.1)],
                n=400,
                samples=2,
                base_seed=1,
                out=str(out),
            )
            run_experiment(cfg)
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_error_rows_keep_running(self):
        # n=50 regular(3): module stub count is odd, generation must fail;
        # the other grid point still produces data
        cfg = ExperimentConfig(
            experiment="custom",
            points=[_point(0.0), _point(0.1)],
            n=50,
            samples=1,
            base_seed=0,
        )
        records, summary = run_experiment(cfg)
        assert "ParityUnrepairable" in records[0]["error"]
        assert records[0]["lambda2"] is None
        assert records[1]["error"] == ""
        assert summary[0]["count"] == 0 and summary[1]["count"] == 1

    def test_csv_schema(self, tmp_path):
        out = tmp_path / "schema.csv"
        cfg = ExperimentConfig(
            experiment="custom",
            points=[_point(0.1)],
            n=400,
            samples=1,
            base_seed=0,
            out=str(out),
        )
        run_experiment(cfg)
        lines = out.read_text(encoding="utf-8").splitlines()
        assert lines[0] == ",".join(COLUMNS)
        cells = lines[1].split(",")
        assert len(cells) == len(COLUMNS)
        # 17-significant-digit reals with '.' decimal separator
        lam = cells[COLUMNS.index("lambda2")]
        assert "." in lam and float(lam) > 0
        assert cells[COLUMNS.index("delta")] == "NA"

    def test_thread_env_respected(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SPECDETECT_THREADS", "1")
        cfg = ExperimentConfig(
            experiment="custom",
            points=[_point(0.1)],
            n=400,
            samples=2,
            base_seed=9,
        )
        records, _ = run_experiment(cfg)
        assert len(records) == 2

    def test_invalid_configs(self):
        with pytest.raises(InvalidSpec):
            ExperimentConfig("custom", [], 100, 1)
        with pytest.raises(InvalidSpec):
            ExperimentConfig("custom", [_point(0.1)], 100, 0)


class TestWriteCsv:
    def test_atomic_no_leftover_temp(self, tmp_path):
        out = tmp_path / "x.csv"
        write_csv([{c: 1.0 for c in COLUMNS}], str(out))
        assert out.exists()
        leftovers = [p for p in os.listdir(tmp_path) if p.endswith(".tmp")]
        assert leftovers == []


class TestPresets:
    def test_fig3_shape(self):
        cfg = figure_preset("fig3_regular_lambda2", n=500, samples=1)
        assert len(cfg.points) == 24
        specs = {p["spec"].c for p in cfg.points}
        assert specs == {3, 4}

    def test_fig10_has_delta(self):
        cfg = figure_preset("fig10_sbm", n=500, samples=1)
        assert all(p["delta"] is not None for p in cfg.points)
        assert all(p["laplacian"] is LaplacianKind.NORMALIZED for p in cfg.points)

    def test_bimodal_presets(self):
        for name in ("fig6_bimodal_L", "fig8_bimodal_ncut"):
            cfg = figure_preset(name, n=500, samples=1)
            assert len(cfg.points) == 60
            assert cfg.samples == 1

    def test_unknown_preset(self):
        with pytest.raises(InvalidSpec):
            figure_preset("fig99")
