"""
End-to-end tests of the command line: exit codes, the one-line error
format and each command on a small synthetic video.
"""

import contextlib
import io
import json
import os
import re
import sys
import tempfile
from unittest import mock

import torch

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import main as cli
from src.model.generator import HDTRGenerator
from src.model.model_config import ModelConfig
from src.training.checkpoint import Checkpoint, save_checkpoint

ERROR_LINE = re.compile(r'^error=(\w+) message=(".*")$')

TOY_TRAIN_YAML = """\
seed: 3
model:
  base_channels: 16
  discriminator_channels: 16
loss:
  extractor: toy
optim:
  learning_rate: 1.0e-3
  batch_size: 2
  steps: 2
data:
  toy_frames: 4
  deterministic: true
output:
  dir: {out}
"""


def run(argv):
    """Run the CLI; returns (exit code, stdout, stderr)."""
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = cli.main(argv)
    return code, out.getvalue(), err.getvalue()


def parse_error(stderr: str):
    lines = stderr.strip().splitlines()
    assert len(lines) == 1, f"Expected one error line, got {lines}"
    match = ERROR_LINE.match(lines[0])
    assert match, lines[0]
    return match.group(1), json.loads(match.group(2))


def write_checkpoint(path: str) -> str:
    torch.manual_seed(0)
    model_config = ModelConfig(base_channels=16, discriminator_channels=16)
    return save_checkpoint(path, Checkpoint(step=0, model_config=model_config,
                                            generator=HDTRGenerator(model_config).state_dict()))


def synth(tmp: str, *extra: str):
    out = os.path.join(tmp, "toy")
    code, _, err = run(["synth", "--out", out, "--frames", "4", "--seed", "1", *extra])
    assert code == 0, err
    return os.path.join(out, "frames"), os.path.join(out, "landmarks")


# =========================================================================
# Tests: Success paths
# =========================================================================

def test_synth_writes_frames_and_sidecars():
    with tempfile.TemporaryDirectory() as tmp:
        frame_dir, landmark_dir = synth(tmp, "--drop", "2")
        assert sorted(os.listdir(frame_dir)) == [f"{k:05d}.png" for k in range(4)]
        assert os.path.getsize(os.path.join(landmark_dir, "00002.txt")) == 0
        assert os.path.getsize(os.path.join(landmark_dir, "00001.txt")) > 0


def test_evaluate_prints_table_and_writes_report():
    with tempfile.TemporaryDirectory() as tmp:
        frame_dir, landmark_dir = synth(tmp)
        report = os.path.join(tmp, "report.jsonl")
        code, stdout, _ = run([
            "evaluate", "--frames", frame_dir, "--landmarks", landmark_dir,
            "--against", frame_dir, "--report", report,
        ])
        assert code == 0
        assert "Brenner" in stdout and "Entropy" in stdout
        with open(report) as f:
            assert len(f.readlines()) == 5


def test_restore_and_bench_from_checkpoint():
    with tempfile.TemporaryDirectory() as tmp:
        frame_dir, landmark_dir = synth(tmp, "--drop", "0")
        ckpt = write_checkpoint(os.path.join(tmp, "g.pt"))
        out_dir = os.path.join(tmp, "restored")

        code, stdout, err = run([
            "restore", "--ckpt", ckpt, "--frames", frame_dir,
            "--landmarks", landmark_dir, "--out", out_dir, "--device", "cpu",
        ])
        assert code == 0, err
        assert "Time" in stdout
        assert os.path.isfile(os.path.join(out_dir, "report.jsonl"))
        assert len([n for n in os.listdir(out_dir) if n.endswith(".png")]) == 4

        code, stdout, err = run(["bench", "--ckpt", ckpt, "--iters", "2", "--warmup", "0", "--device", "cpu", "--json"])
        assert code == 0, err
        stats = json.loads(stdout.strip().splitlines()[-1])
        assert stats["n_iters"] == 2 and stats["median_s"] >= 0


def test_train_writes_checkpoint_and_log():
    with tempfile.TemporaryDirectory() as tmp:
        out_dir = os.path.join(tmp, "run")
        config_path = os.path.join(tmp, "train.yaml")
        with open(config_path, "w") as f:
            f.write(TOY_TRAIN_YAML.format(out=out_dir))

        code, stdout, err = run(["train", "--config", config_path, "--device", "cpu", "--no-progress"])
        assert code == 0, err
        assert "Final step 2" in stdout
        assert os.path.isfile(os.path.join(out_dir, "latest.pt"))
        with open(os.path.join(out_dir, "train_log.jsonl")) as f:
            assert len(f.readlines()) == 2

        code, _, err = run(["train", "--config", config_path, "--steps", "1",
                            "--out", os.path.join(tmp, "other"), "--device", "cpu", "--no-progress"])
        assert code == 0, err
        assert os.path.isfile(os.path.join(tmp, "other", "latest.pt"))


# =========================================================================
# Tests: Failures
# =========================================================================

def test_missing_frame_directory_exits_2():
    with tempfile.TemporaryDirectory() as tmp:
        code, _, err = run(["evaluate", "--frames", os.path.join(tmp, "nothing")])
    assert code == 2
    name, message = parse_error(err)
    assert name == "DatasetError"
    assert "nothing" in message


def test_count_mismatch_exits_2_before_writing():
    with tempfile.TemporaryDirectory() as tmp:
        frame_dir, landmark_dir = synth(tmp)
        os.remove(os.path.join(landmark_dir, "00003.txt"))
        ckpt = write_checkpoint(os.path.join(tmp, "g.pt"))
        out_dir = os.path.join(tmp, "restored")
        code, _, err = run(["restore", "--ckpt", ckpt, "--frames", frame_dir,
                            "--landmarks", landmark_dir, "--out", out_dir, "--device", "cpu"])
        assert code == 2
        assert parse_error(err)[0] == "DatasetError"
        assert not os.path.exists(out_dir)


def test_missing_checkpoint_exits_2():
    with tempfile.TemporaryDirectory() as tmp:
        frame_dir, landmark_dir = synth(tmp)
        code, _, err = run(["restore", "--ckpt", os.path.join(tmp, "none.pt"), "--frames", frame_dir,
                            "--landmarks", landmark_dir, "--out", os.path.join(tmp, "o"), "--device", "cpu"])
    assert code == 2
    assert parse_error(err)[0] == "CheckpointError"


def test_fixed_frame_policy_needs_image():
    with tempfile.TemporaryDirectory() as tmp:
        code, _, err = run(["restore", "--ckpt", "x.pt", "--frames", tmp, "--landmarks", tmp,
                            "--out", os.path.join(tmp, "o"), "--ref-policy", "fixed_frame"])
    assert code == 2
    assert parse_error(err)[0] == "ConfigurationError"


def test_bench_zero_iterations_exits_2():
    with tempfile.TemporaryDirectory() as tmp:
        ckpt = write_checkpoint(os.path.join(tmp, "g.pt"))
        code, _, err = run(["bench", "--ckpt", ckpt, "--iters", "0", "--device", "cpu"])
    assert code == 2
    assert parse_error(err)[0] == "BenchmarkError"


def test_bad_config_exits_2():
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "bad.yaml")
        with open(path, "w") as f:
            f.write("optim:\n  learning_rat: 0.1\n")
        code, _, err = run(["train", "--config", path])
    assert code == 2
    name, message = parse_error(err)
    assert name == "ConfigurationError"
    assert "learning_rat" in message


def test_missing_required_argument_is_one_error_line():
    code, stdout, err = run(["restore", "--frames", "x"])
    assert code == 2
    name, message = parse_error(err)
    assert name == "UsageError"
    assert "--ckpt" in message and "--out" in message
    assert stdout == ""


def test_malformed_argument_values_are_usage_errors():
    for argv in (["bench", "--ckpt", "g.pt", "--iters", "abc"],
                 ["restore", "--ckpt", "g.pt", "--frames", "f", "--landmarks", "l", "--out", "o",
                  "--ref-policy", "nearest"],
                 ["unknown-command"],
                 []):
        code, _, err = run(argv)
        assert code == 2, argv
        name, _ = parse_error(err)
        assert name == "UsageError", argv


def test_unexpected_error_exits_1():
    with mock.patch.object(cli, "cmd_synth", side_effect=RuntimeError('disk "full"')):
        code, _, err = run(["synth", "--out", "unused"])
    assert code == 1
    name, message = parse_error(err)
    assert name == "RuntimeError"
    assert message == 'disk "full"'


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
