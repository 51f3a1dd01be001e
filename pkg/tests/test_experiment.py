import math

import numpy as np
import pytest

from reluapprox.errors import HypothesisViolation, InvalidParameter
from reluapprox.experiment import CSV_HEADER, ExperimentConfig, repetition_rows, run_experiment
from reluapprox.serialization import dumps

SMALL = dict(architecture=(1, 4, 1), K=5, M=100, R=4, n_error_samples=500, n_bootstrap=20)


class TestConfig:
    def test_defaults(self):
        cfg = ExperimentConfig()
        assert cfg.eligible_steps == (0,) and cfg.beta == 2.0

    def test_round_trip(self):
        cfg = ExperimentConfig(**SMALL)
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg

    def test_unknown_field(self):
        with pytest.raises(InvalidParameter, match="unknown"):
            ExperimentConfig.from_dict({"K": 3, "bogus": 1})

    @pytest.mark.parametrize("kw", [{"data_mode": "streaming"}, {"R": 0}, {"n_error_samples": 1}])
    def test_invalid(self, kw):
        with pytest.raises(InvalidParameter):
            ExperimentConfig(**kw)


class TestRun:
    def test_report_structure(self):
        rep = run_experiment(ExperimentConfig(**SMALL))
        assert rep["schema_version"] == 1 and rep["error_kind"] == "l1"
        assert len(rep["repetitions"]) == 4
        assert rep["bound"]["measured"] == pytest.approx(rep["aggregate"]["mean_error"])
        assert rep["bound"]["within_bound"]
        assert all(row["n"] == 0 and 1 <= row["k"] <= 5 for row in rep["repetitions"])

    def test_repetitions_use_distinct_seeds(self):
        rep = run_experiment(ExperimentConfig(**SMALL))
        assert len({row["seed"] for row in rep["repetitions"]}) == 4

    def test_seed_changes_result(self):
        a = run_experiment(ExperimentConfig(**SMALL, seed=1))
        b = run_experiment(ExperimentConfig(**SMALL, seed=2))
        assert a["aggregate"]["mean_error"] != b["aggregate"]["mean_error"]

    def test_deterministic_json(self):
        assert dumps(run_experiment(ExperimentConfig(**SMALL))) == dumps(run_experiment(ExperimentConfig(**SMALL)))

    def test_more_restarts_never_hurt_selection_risk(self):
        few = run_experiment(ExperimentConfig(**{**SMALL, "K": 2}))
        many = run_experiment(ExperimentConfig(**{**SMALL, "K": 20}))
        for a, b in zip(few["repetitions"], many["repetitions"]):
            assert b["selection_risk"] <= a["selection_risk"]

    def test_constant_target(self):
        cfg = ExperimentConfig(**{**SMALL, "target": "constant", "K": 50, "target_params": {"value": 0.5}})
        rep = run_experiment(cfg)
        assert rep["aggregate"]["mean_error"] < 0.2

    def test_sgd_fresh_mode(self):
        cfg = ExperimentConfig(**{**SMALL, "N": 20, "learning_rate": 0.05, "batch_size": 16, "data_mode": "fresh",
                                  "eligible_steps": (0, 10, 20)})
        rep = run_experiment(cfg)
        assert {row["n"] for row in rep["repetitions"]} <= {0, 10, 20}

    def test_l2_variant_uses_moment(self):
        cfg = ExperimentConfig(**{**SMALL, "variant": "cor-1d", "p": 2.0, "architecture": (1, 4, 1)})
        rep = run_experiment(cfg)
        errors = np.array([row["error"] for row in rep["repetitions"]])
        assert rep["error_kind"] == "l2"
        assert rep["aggregate"]["measured"] == pytest.approx(math.sqrt(np.mean(errors**2)))

    def test_labels_outside_clip(self):
        cfg = ExperimentConfig(**{**SMALL, "target": "l1-norm", "d": 2, "architecture": (2, 4, 1), "variant": "cor-main",
                                  "c": 2.0})
        with pytest.raises(HypothesisViolation, match="labels"):
            run_experiment(cfg)

    def test_hypothesis_checked_before_running(self):
        with pytest.raises(HypothesisViolation, match="c >= 2"):
            run_experiment(ExperimentConfig(**{**SMALL, "c": 1.5}))

    def test_csv_rows(self):
        rep = run_experiment(ExperimentConfig(**SMALL))
        header, rows = repetition_rows(rep)
        assert header == CSV_HEADER and len(rows) == 4 and rows[0][0] == 1
