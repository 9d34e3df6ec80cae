"""
Tests for the ablation study driver.
"""

import csv
import filecmp
import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import config
from evaluation.ablation import (
    CONDITIONS,
    INPUT_LABEL,
    AblationConfig,
    AblationRunner,
    QuickAblationConfig,
    condition_slug,
    print_summary,
)
from src.common.errors import ConfigurationError
from src.training.config import Ablations


def tiny_config(out_dir: str, **overrides) -> AblationConfig:
    values = dict(steps=2, n_frames=4, batch_size=2, device="cpu", output_dir=out_dir)
    values.update(overrides)
    return AblationConfig(**values)


# =========================================================================
# Tests: AblationRunner
# =========================================================================

def test_runner_scores_every_condition_and_writes_csv():
    with tempfile.TemporaryDirectory() as tmp:
        runner = AblationRunner(tiny_config(tmp))
        results = runner.run_all()

        assert [r.condition for r in results] == list(CONDITIONS)
        for r in results:
            assert r.steps == 2
            assert r.final_rec is not None and math.isfinite(r.final_rec)
            assert r.summary["frames"] == 4
            assert r.summary["time"] is not None and r.summary["time"] > 0
            assert all(math.isfinite(r.summary[name]) for name in config.METRIC_NAMES)
            restored = os.path.join(tmp, condition_slug(r.condition), "restored")
            assert sorted(n for n in os.listdir(restored) if n.endswith(".png")) == [
                f"{k:05d}.png" for k in range(4)
            ]

        # The unrestored input has no restoration time
        assert runner.input_summary["frames"] == 4
        assert runner.input_summary["time"] is None

        path = runner.save_results("ablation.csv")
        with open(path, newline="") as f:
            rows = list(csv.DictReader(f))
        assert [row["condition"] for row in rows] == list(CONDITIONS)
        assert list(rows[0])[:5] == ["condition", "steps", "final_rec", "frames", "time"]
        assert list(rows[0])[5:] == list(config.METRIC_NAMES)
        assert float(rows[0]["brenner"]) >= 0

        lines = runner.table().splitlines()
        labels = [INPUT_LABEL, *CONDITIONS]
        rows_at = [next(i for i, line in enumerate(lines) if line.startswith(label)) for label in labels]
        assert rows_at == sorted(rows_at)
        print_summary(runner)


def test_frames_without_landmarks_pass_through():
    with tempfile.TemporaryDirectory() as tmp:
        runner = AblationRunner(tiny_config(tmp, steps=1, drop=[1], conditions=["default"]))
        runner.run_all()
        restored = os.path.join(tmp, "default", "restored")
        source = os.path.join(tmp, "video", "frames")
        assert filecmp.cmp(os.path.join(source, "00001.png"), os.path.join(restored, "00001.png"), shallow=False)
        assert runner.results[0].summary["frames"] == 4


def test_runner_rejects_unknown_condition():
    try:
        AblationRunner(AblationConfig(conditions=["default", "w/o HourGlass"]))
        assert False, "Should have raised ConfigurationError"
    except ConfigurationError:
        pass


def test_empty_results_write_empty_csv():
    with tempfile.TemporaryDirectory() as tmp:
        runner = AblationRunner(tiny_config(tmp))
        path = runner.save_results()
        assert os.path.getsize(path) == 0


# =========================================================================
# Tests: Configuration
# =========================================================================

def test_condition_directories_are_distinct():
    slugs = [condition_slug(c) for c in CONDITIONS]
    assert len(set(slugs)) == len(slugs)
    assert condition_slug("w/o CF") == "w_o_cf"


def test_conditions_switch_one_thing_each():
    assert CONDITIONS["default"] == Ablations()
    assert not CONDITIONS["w/o CF"].use_cf
    assert not CONDITIONS["w/o ref"].use_reference_branch
    assert not CONDITIONS["w/o perc"].use_perc_loss


def test_train_config_follows_condition():
    with tempfile.TemporaryDirectory() as tmp:
        runner = AblationRunner(tiny_config(tmp))
        cfg = runner.train_config("w/o perc", "frames", "landmarks")
        assert cfg.effective_weights().lambda_perc == 0.0
        assert cfg.data.sources() == [("frames", "landmarks")]
        assert cfg.output.dir == os.path.join(tmp, "w_o_perc", "train")
        assert cfg.steps == 2 and cfg.seed == config.SEED


def test_quick_config_is_smaller():
    quick, full = QuickAblationConfig(), AblationConfig()
    assert quick.steps < full.steps
    assert quick.n_frames < full.n_frames
    assert quick.conditions == full.conditions


# =========================================================================
# Main
# =========================================================================

if __name__ == "__main__":
    test_functions = [
        obj for name, obj in list(globals().items())
        if name.startswith("test_") and callable(obj)
    ]
    passed = 0
    failed = 0
    for test_fn in test_functions:
        try:
            test_fn()
            passed += 1
            print(f"  PASS: {test_fn.__name__}")
        except Exception as e:
            failed += 1
            print(f"  FAIL: {test_fn.__name__}: {e}")

    print(f"\n{'='*60}")
    print(f"Results: {passed} passed, {failed} failed out of {passed + failed}")
    if failed == 0:
        print("All tests passed!")
    else:
        print("Some tests failed!")
        sys.exit(1)
