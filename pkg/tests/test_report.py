"""
Tests for per-frame metric reports, aggregation and the report file.
"""

import math
import os
import sys
import tempfile

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import config
from src.common.errors import MetricError
from src.metrics.report import (
    aggregate,
    format_table,
    read_report,
    score_frame,
    score_frames,
    write_report,
)
from src.metrics.sharpness import compute_all


def random_frames(n: int, seed: int = 0, shape=(24, 32, 3)):
    rng = np.random.default_rng(seed)
    return [rng.uniform(0, 255, size=shape) for _ in range(n)]


# =========================================================================
# Tests: score_frame / score_frames
# =========================================================================

def test_score_frame_matches_compute_all():
    frame = random_frames(1)[0]
    report = score_frame(frame, frame="a.png", latency=0.01, region="crop")
    values, shape = compute_all(frame)
    assert report.metrics == values
    assert (report.height, report.width) == shape == (24, 32)
    assert report.region == "crop"
    assert report.latency == 0.01


def test_single_frame_aggregate_equals_frame():
    frames = random_frames(1)
    reports, summary = score_frames(frames)
    assert len(reports) == 1
    for name in config.METRIC_NAMES:
        assert math.isclose(summary[name], reports[0].metrics[name], rel_tol=1e-12)
    assert summary["time"] is None
    assert summary["frames"] == 1


def test_aggregate_is_arithmetic_mean():
    frames = random_frames(2, seed=1)
    reports, summary = score_frames(frames, latencies=[0.1, 0.3])
    for name in config.METRIC_NAMES:
        expected = (reports[0].metrics[name] + reports[1].metrics[name]) / 2
        assert math.isclose(summary[name], expected, rel_tol=1e-12)
    assert math.isclose(summary["time"], 0.2)


def test_time_averages_known_latencies_only():
    reports, summary = score_frames(random_frames(3), latencies=[0.2, None, 0.4])
    assert math.isclose(summary["time"], 0.3)
    assert reports[1].latency is None
    assert summary["timed"] == 2 and summary["held"] == 0


def test_held_frames_counted_in_aggregate():
    reports, summary = score_frames(random_frames(3), latencies=[0.2, None, None], held=[False, True, True])
    assert [r.held for r in reports] == [False, True, True]
    assert summary["held"] == 2 and summary["timed"] == 1
    assert math.isclose(summary["time"], 0.2)


def test_reports_keep_input_order():
    frames = random_frames(12, seed=2)
    names = [f"{i:05d}.png" for i in range(12)]
    reports, _ = score_frames(frames, names=names, workers=4)
    assert [r.frame for r in reports] == names
    for frame, report in zip(frames, reports):
        assert report.metrics == compute_all(frame)[0]


def test_score_frames_empty_raises():
    try:
        score_frames([])
        assert False, "Should have raised MetricError"
    except MetricError:
        pass


def test_score_frames_length_mismatch_raises():
    frames = random_frames(2)
    for kwargs in ({"latencies": [0.1]}, {"names": ["a"]}, {"regions": ["crop"]}, {"held": [True]}):
        try:
            score_frames(frames, **kwargs)
            assert False, f"Should have raised MetricError for {kwargs}"
        except MetricError:
            pass


def test_aggregate_empty_raises():
    try:
        aggregate([])
        assert False, "Should have raised MetricError"
    except MetricError:
        pass


# =========================================================================
# Tests: Report file and table
# =========================================================================

def test_report_record_key_order():
    record = score_frame(random_frames(1)[0], frame="x").to_record()
    assert list(record) == ["frame", "region", "height", "width", *config.METRIC_NAMES, "time", "held"]
    assert record["held"] is False


def test_write_and_read_report():
    frames = random_frames(3, seed=3)
    reports, summary = score_frames(frames, latencies=[0.01, 0.02, 0.03], names=["a", "b", "c"])
    with tempfile.TemporaryDirectory() as tmp:
        path = write_report(os.path.join(tmp, "out", "report.jsonl"), reports, summary)
        table, loaded = read_report(path)

    assert list(table["frame"]) == ["a", "b", "c"]
    assert list(table.columns) == ["frame", "region", "height", "width", *config.METRIC_NAMES, "time"]
    for name in config.METRIC_NAMES:
        assert math.isclose(loaded[name], summary[name], rel_tol=1e-12)
        assert math.isclose(float(table[name].mean()), summary[name], rel_tol=1e-9)
    assert loaded["frames"] == 3


def test_format_table_layout():
    _, summary = score_frames(random_frames(2), latencies=[0.5, 0.5])
    _, no_time = score_frames(random_frames(2, seed=4))
    text = format_table({"restored": summary, "original": no_time})
    lines = text.splitlines()
    assert "Time" in lines[0] and "Brenner" in lines[0] and "Entropy" in lines[0]
    assert "Method" in text
    restored = next(line for line in lines if line.startswith("restored"))
    original = next(line for line in lines if line.startswith("original"))
    assert "0.5000" in restored
    assert original.split()[1] == "-"


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
