import json

import pandas as pd
import pytest

from mtnet.cli.app import main
from mtnet.cli.config import ExperimentConfig
from mtnet.cli.experiments import load_dataset, run_ablate, run_sample_efficiency
from mtnet.data import load_encoded
from mtnet.exceptions import ConfigError, SubsampleError

TINY = {
    "data": {
        "synth": {
            "n_subjects": 80, "waves": 2, "n_numeric": 6, "n_categorical": 2, "categories": 3,
            "n_archetypes": 2, "positive_rate": 0.2, "relevant_fraction": 0.2, "trend_strength": 2.0,
        },
    },
    "model": {"lstm_units": 6, "feature_dim": 4},
    "train": {"epochs": 1, "batch_size": 16, "batches_per_epoch": 2, "augment_factor": 2},
    "eval": {"seeds": [1, 2]},
    "experiment": {"fractions": [0.5, 1.0], "alpha_grid": [0.5], "beta_grid": [1.0, 2.0]},
}


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(TINY))
    return str(path)


def _run(command, config_file, out, *extra):
    return main([command, "--config", config_file, "--out", str(out), "--quiet", *extra])


class TestConfig:
    def test_defaults(self):
        cfg = ExperimentConfig.from_dict({})
        assert cfg.eval.seeds == (1, 2, 3, 4, 5)
        assert cfg.train.batch_size == 256 and cfg.train.epochs == 30
        assert cfg.loss.alpha == 0.5 and cfg.loss.beta == 2.0
        assert cfg.data.split_ratios == (0.6, 0.2, 0.2)

    def test_sections_reach_the_train_config(self):
        cfg = ExperimentConfig.from_dict(TINY)
        train_cfg = cfg.train_config(7)
        assert train_cfg.seed == 7
        assert train_cfg.network.lstm_units == 6
        assert cfg.data.synth.n_subjects == 80

    @pytest.mark.parametrize("doc,path", [
        ({"train": {"epochz": 1}}, "train.epochz"),
        ({"data": {"synth": {"rows": 3}}}, "data.synth.rows"),
        ({"loss": {"center": [0.0]}}, "loss.center"),
        ({"extra": {}}, "extra"),
    ])
    def test_unknown_keys_are_named(self, doc, path):
        with pytest.raises(ConfigError, match=path.replace(".", r"\.")):
            ExperimentConfig.from_dict(doc)

    def test_invalid_values(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"train": {"batch_size": 7}})
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"eval": {"split": "holdout"}})
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"experiment": {"fractions": [0.0]}})
        with pytest.raises(ConfigError, match="experiment.mode"):
            ExperimentConfig.from_dict({"experiment": {"mode": "tune"}})

    def test_to_dict_round_trips(self):
        cfg = ExperimentConfig.from_dict(TINY)
        assert ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


class TestCommands:
    def test_generate_writes_long_panel(self, config_file, tmp_path):
        assert _run("generate", config_file, tmp_path / "out") == 0
        cohort = tmp_path / "out" / "cohort"
        raw = pd.read_csv(cohort / "raw.csv")
        assert len(raw) == 80 * 2
        labels = pd.read_csv(cohort / "labels.csv")
        assert labels["label"].sum() == 16
        assert (cohort / "schema.json").is_file() and (cohort / "archetypes.csv").is_file()

    def test_generated_directory_feeds_training(self, config_file, tmp_path):
        _run("generate", config_file, tmp_path / "gen")
        doc = dict(TINY, data={"path": str(tmp_path / "gen" / "cohort")})
        cfg_path = tmp_path / "from_dir.json"
        cfg_path.write_text(json.dumps(doc))
        assert _run("preprocess", str(cfg_path), tmp_path / "prep") == 0
        encoded = load_encoded(tmp_path / "prep" / "encoded.bin")
        assert (encoded.N, encoded.w, encoded.D) == (80, 2, 6 + 2 * 3)
        split = json.loads((tmp_path / "prep" / "split.json").read_text())
        assert [len(split[k]) for k in ("train", "val", "test")] == [48, 16, 16]

    def test_train_then_evaluate(self, config_file, tmp_path):
        out = tmp_path / "run"
        assert _run("train", config_file, out) == 0
        assert (out / "checkpoints" / "seed_1.ckpt").is_file()
        trained = json.loads((out / "train.json").read_text())
        assert [r["split"] for r in trained["reports"]] == ["test", "val"]
        assert _run("evaluate", config_file, out) == 0
        evaluated = json.loads((out / "evaluate.json").read_text())
        assert evaluated["reports"][0]["mean"] == trained["reports"][0]["mean"]
        assert evaluated["config"] == trained["config"]

    def test_evaluate_without_checkpoints_fails(self, config_file, tmp_path):
        assert _run("evaluate", config_file, tmp_path / "empty") == 1

    def test_seed_override(self, config_file, tmp_path):
        assert _run("train", config_file, tmp_path / "one", "--seed", "3") == 0
        doc = json.loads((tmp_path / "one" / "train.json").read_text())
        assert doc["reports"][0]["seeds"] == [3]
        assert doc["config"]["eval"]["seeds"] == [3]

    def test_reruns_are_identical(self, config_file, tmp_path):
        _run("train", config_file, tmp_path / "a", "--seed", "1")
        _run("train", config_file, tmp_path / "b", "--seed", "1")
        assert (tmp_path / "a" / "train.csv").read_bytes() == (tmp_path / "b" / "train.csv").read_bytes()

    def test_ablate_has_five_rows(self, config_file, tmp_path):
        assert _run("ablate", config_file, tmp_path / "abl", "--workers", "2") == 0
        doc = json.loads((tmp_path / "abl" / "ablate.json").read_text())
        assert [r["name"] for r in doc["reports"]] == [
            "LSTM", "LSTM+l_a", "LSTM+l_o", "LSTM+l_a+l_o", "LSTM+l_a+l_o+DA",
        ]
        assert all(len(r["results"]) == 2 for r in doc["reports"])
        table = pd.read_csv(tmp_path / "abl" / "ablate.csv")
        assert len(table) == 5 * 2
        assert {"auc_roc", "auc_pr", "f_score", "precision", "recall"} <= set(table.columns)

    def test_workers_do_not_change_results(self, config_file, tmp_path):
        _run("ablate", config_file, tmp_path / "serial", "--workers", "1")
        _run("ablate", config_file, tmp_path / "parallel", "--workers", "3")
        serial = pd.read_csv(tmp_path / "serial" / "ablate.csv")
        parallel = pd.read_csv(tmp_path / "parallel" / "ablate.csv")
        pd.testing.assert_frame_equal(serial, parallel)

    def test_sample_efficiency_grid(self, config_file, tmp_path):
        assert _run("sample-efficiency", config_file, tmp_path / "eff") == 0
        doc = json.loads((tmp_path / "eff" / "sample_efficiency.json").read_text())
        assert [(r["name"], r["fraction"]) for r in doc["reports"]] == [
            ("MTNet", 0.5), ("LSTM", 0.5), ("MTNet", 1.0), ("LSTM", 1.0),
        ]

    def test_sensitivity_grid(self, config_file, tmp_path):
        assert _run("sensitivity", config_file, tmp_path / "sens") == 0
        doc = json.loads((tmp_path / "sens" / "sensitivity.json").read_text())
        assert [(r["parameter"], r["value"]) for r in doc["reports"]] == [
            ("alpha", 0.5), ("beta", 1.0), ("beta", 2.0),
        ]

    def test_bad_config_exits_with_error(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"train": {"epochz": 1}}))
        assert _run("train", str(path), tmp_path / "x") == 1

    def test_missing_config_file(self, tmp_path):
        assert _run("train", str(tmp_path / "absent.json"), tmp_path / "x") == 1

    def test_mode_must_match_the_subcommand(self, tmp_path):
        path = tmp_path / "ablate_only.json"
        path.write_text(json.dumps(dict(TINY, experiment={"mode": "ablate"})))
        assert _run("train", str(path), tmp_path / "x") == 1
        assert not (tmp_path / "x" / "train.json").exists()
        assert _run("ablate", str(path), tmp_path / "y") == 0

    def test_fraction_leaving_one_positive_is_rejected(self, tmp_path):
        cfg = ExperimentConfig.from_dict(dict(TINY, experiment={"fractions": [0.1]}))
        with pytest.raises(SubsampleError, match="fraction 0.1 leaves 1 positive"):
            run_sample_efficiency(cfg, tmp_path / "eff")


@pytest.fixture(scope="module")
def default_cohort_runs(tmp_path_factory):
    """Ablation grid and half-data cells on the default cohort, seeds 1-5"""
    cfg = ExperimentConfig.from_dict({"experiment": {"fractions": [0.5], "workers": 4}})
    dataset = load_dataset(cfg)
    out = tmp_path_factory.mktemp("default")
    ablation = run_ablate(cfg, out, dataset)
    efficiency = run_sample_efficiency(cfg, out, dataset)
    return ({r["name"]: r["mean"]["auc_pr"] for r in ablation["reports"]},
            {r["name"]: r["mean"]["auc_pr"] for r in efficiency["reports"]})


@pytest.mark.slow
class TestDefaultCohort:
    def test_auxiliary_tasks_improve_average_precision(self, default_cohort_runs):
        ablation, _ = default_cohort_runs
        assert ablation["LSTM+l_a+l_o+DA"] >= ablation["LSTM+l_a+l_o"] >= ablation["LSTM"]
        assert ablation["LSTM+l_a+l_o+DA"] - ablation["LSTM"] >= 0.02

    def test_half_the_data_matches_the_full_baseline(self, default_cohort_runs):
        ablation, half = default_cohort_runs
        assert half["MTNet"] >= ablation["LSTM"] - 0.01
