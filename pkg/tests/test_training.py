"""
Tests for sample assembly, the training configuration and the adversarial
training loop.

The overfit and ablation runs use base width 16 with a raised learning
rate so they finish on a CPU.
"""

import copy
import json
import os
import sys
import tempfile

import numpy as np
import torch

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import config
from src.common.data_loader import FrameStore
from src.common.errors import ConfigurationError, DatasetError, NonFiniteLossError
from src.losses.feature_extractor import ToyFeatureExtractor
from src.losses.objectives import GeneratorLossParts, LossWeights, d_loss, g_adv_loss, perc_loss, rec_loss, total_g_loss
from src.model.discriminator import PatchDiscriminator
from src.model.generator import HDTRGenerator
from src.training.config import (
    Ablations,
    DataConfig,
    OutputConfig,
    TrainConfig,
    load_train_config,
    train_config_from_dict,
)
from src.training.dataset import build_sample, fixed_batch, iterate_batches, reference_candidates
from src.training.synthetic import synthesize_toy_dataset, write_frame_store
from src.training.trainer import Trainer, train_step

TOY_CONFIG = os.path.join(config.CONFIGS_DIR, "train_toy.yaml")


def small_config(out_dir: str, **overrides) -> TrainConfig:
    values = dict(
        base_channels=16,
        discriminator_channels=16,
        extractor="toy",
        learning_rate=1e-3,
        batch_size=2,
        steps=10,
        data=DataConfig(toy_frames=4, deterministic=True),
        output=OutputConfig(dir=out_dir, checkpoint_every=1000),
    )
    values.update(overrides)
    return TrainConfig(**values)


def toy_store(n_frames: int = 4, seed: int = 0, **kwargs) -> FrameStore:
    return synthesize_toy_dataset(n_frames, np.random.default_rng(seed), **kwargs)


def sgd_frozen(module: torch.nn.Module) -> torch.optim.Optimizer:
    # Zero step size: gradients are computed but parameters never move
    return torch.optim.SGD(module.parameters(), lr=0.0)


def snapshot(module: torch.nn.Module):
    return [p.detach().clone() for p in module.parameters()]


def changed(module: torch.nn.Module, before) -> bool:
    return any(not torch.equal(p, b) for p, b in zip(module.parameters(), before))


# =========================================================================
# Tests: Sample assembly
# =========================================================================

def test_two_frames_reference_is_other_frame():
    store = toy_store(2)
    rng = np.random.default_rng(0)
    for index in (0, 1):
        sample = build_sample(store, index, rng)
        assert sample.reference_index == 1 - index
        assert tuple(sample.target.shape) == (3, config.CROP_SIZE, config.CROP_SIZE)


def test_reference_never_equals_target():
    store = toy_store(5)
    rng = np.random.default_rng(1)
    for _ in range(1000):
        index = int(rng.integers(5))
        assert build_sample(store, index, rng).reference_index != index


def test_reference_prefers_same_video():
    store = toy_store(3, videos=2)
    for index in range(len(store)):
        candidates = reference_candidates(store, index)
        assert index not in candidates
        assert all(store[c].video == store[index].video for c in candidates)


def test_reference_falls_back_to_other_video():
    # Video toy_01 keeps a single usable frame
    store = toy_store(2, videos=2)
    store.records[3].landmarks = None
    assert reference_candidates(store, 2) == [0, 1]


def test_sample_inputs_are_consistent():
    store = toy_store(3)
    sample = build_sample(store, 0, np.random.default_rng(2))
    masked, contour = sample.triplet.masked, sample.triplet.contour
    assert masked.shape == contour.shape == sample.triplet.reference.shape == sample.target.shape
    assert set(torch.unique(contour).tolist()) <= {0.0, 1.0}
    # The masked crop equals the target wherever it is non-zero
    visible = masked.abs().sum(dim=0) > 0
    assert torch.equal(masked[:, visible], sample.target[:, visible])


def test_frame_without_landmarks_is_skipped():
    store = toy_store(3, drop_landmarks=[1])
    assert build_sample(store, 1, np.random.default_rng(0)) is None
    assert all(build_sample(store, 0, np.random.default_rng(s)).reference_index == 2 for s in range(10))


def test_too_few_usable_frames_raises():
    store = toy_store(2, drop_landmarks=[1])
    for fn in (lambda: build_sample(store, 0, np.random.default_rng(0)),
               lambda: next(iterate_batches(store, 2, np.random.default_rng(0)))):
        try:
            fn()
            assert False, "Should have raised DatasetError"
        except DatasetError:
            pass


def test_fixed_batch_rejects_landmarkless_frames():
    store = toy_store(3, drop_landmarks=[2])
    try:
        fixed_batch(store, [0, 2], np.random.default_rng(0))
        assert False, "Should have raised DatasetError"
    except DatasetError:
        pass


def test_batch_stream_is_seeded():
    store = toy_store(6, videos=2)
    a = iterate_batches(store, 3, np.random.default_rng(7))
    b = iterate_batches(store, 3, np.random.default_rng(7))
    for _ in range(5):
        x, y = next(a), next(b)
        assert x.indices == y.indices
        assert torch.equal(x.reference, y.reference)
        assert torch.equal(x.target, y.target)


def test_synthetic_store_mouth_corners_ordered():
    store = toy_store(8)
    for record in store.records:
        pts = record.landmarks.points
        assert pts[config.MOUTH_LEFT_INDEX, 0] < pts[config.MOUTH_RIGHT_INDEX, 0]


# =========================================================================
# Tests: Configuration
# =========================================================================

def test_toy_config_file_loads():
    cfg = load_train_config(TOY_CONFIG)
    assert cfg.base_channels == 16
    assert cfg.extractor == "toy"
    assert cfg.learning_rate == 1e-3
    assert cfg.data.frames is None


def test_default_config_file_loads():
    cfg = load_train_config(config.DEFAULT_TRAIN_CONFIG)
    assert cfg.batch_size == config.BATCH_SIZE
    assert cfg.learning_rate == config.LEARNING_RATE
    assert cfg.weights == LossWeights()


def test_unknown_config_keys_raise():
    bad = [
        {"optimiser": {}},
        {"model": {"base_channel": 16}},
        {"loss": {"lambda_l1": 1.0}},
        {"data": "frames"},
    ]
    for values in bad:
        try:
            train_config_from_dict(values, apply_env=False)
            assert False, f"Should have raised ConfigurationError for {values}"
        except ConfigurationError:
            pass


def test_invalid_config_values_raise():
    bad = [
        {"optim": {"learning_rate": 0}},
        {"optim": {"batch_size": 0}},
        {"optim": {"learning_rate": "fast"}},
        {"model": {"base_channels": 10}},
        {"loss": {"lambda_gan": -1.0}},
        {"data": {"frames": "some/dir"}},
        {"data": {"frames": ["a/frames", "b/frames"], "landmarks": ["a/landmarks"]}},
        {"data": {"frames": [], "landmarks": []}},
        {"loss": {"lambda_gan": 0.0, "lambda_perc": 1.0, "lambda_rec": 0.0},
         "ablations": {"use_perc_loss": False}},
    ]
    for values in bad:
        try:
            train_config_from_dict(values, apply_env=False)
            assert False, f"Should have raised ConfigurationError for {values}"
        except ConfigurationError:
            pass


def test_yaml_string_learning_rate_is_converted():
    cfg = train_config_from_dict({"optim": {"learning_rate": "1e-4"}}, apply_env=False)
    assert cfg.learning_rate == 1e-4


def test_config_file_errors():
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "broken.yaml")
        with open(path, "w") as f:
            f.write("model: [unclosed\n")
        list_path = os.path.join(tmp, "list.yaml")
        with open(list_path, "w") as f:
            f.write("- 1\n- 2\n")
        for p in (path, list_path, os.path.join(tmp, "missing.yaml")):
            try:
                load_train_config(p)
                assert False, f"Should have raised ConfigurationError for {p}"
            except ConfigurationError:
                pass


def test_seed_environment_override():
    previous = os.environ.get(config.SEED_ENV_VAR)
    try:
        os.environ[config.SEED_ENV_VAR] = "7"
        assert train_config_from_dict({"seed": 3}).seed == 7
        assert train_config_from_dict({"seed": 3}, apply_env=False).seed == 3
        os.environ[config.SEED_ENV_VAR] = "seven"
        try:
            train_config_from_dict({"seed": 3})
            assert False, "Should have raised ConfigurationError"
        except ConfigurationError:
            pass
    finally:
        if previous is None:
            os.environ.pop(config.SEED_ENV_VAR, None)
        else:
            os.environ[config.SEED_ENV_VAR] = previous


def test_perceptual_ablation_zeroes_weight():
    cfg = TrainConfig(ablations=Ablations(use_perc_loss=False))
    assert cfg.effective_weights().lambda_perc == 0.0
    assert cfg.weights.lambda_perc == config.LAMBDA_PERC


def test_config_dict_roundtrip():
    cfg = small_config("results/x", ablations=Ablations(use_cf=False))
    again = train_config_from_dict(cfg.to_dict(), apply_env=False)
    assert again == cfg


# =========================================================================
# Tests: Alternating updates
# =========================================================================

def _models(cfg: TrainConfig):
    torch.manual_seed(0)
    return HDTRGenerator(cfg.model_config()), PatchDiscriminator(cfg.model_config())


def test_train_step_gradients_are_isolated():
    with tempfile.TemporaryDirectory() as tmp:
        cfg = small_config(tmp)
        batch = fixed_batch(toy_store(3), [0, 1], np.random.default_rng(0))
        generator, discriminator = _models(cfg)
        extractor = ToyFeatureExtractor()

        # Expected gradients computed separately on copies
        gen_copy, disc_copy = copy.deepcopy(generator), copy.deepcopy(discriminator)
        output = gen_copy(batch.masked, batch.contour, batch.reference)
        d_loss(disc_copy(batch.target), disc_copy(output.detach())).backward()
        expected_d = [p.grad.clone() for p in disc_copy.parameters()]

        disc_frozen = copy.deepcopy(disc_copy)
        for p in disc_frozen.parameters():
            p.requires_grad_(False)
        weights = cfg.effective_weights()
        parts = GeneratorLossParts(
            g_adv=g_adv_loss(disc_frozen(output)),
            perc=perc_loss(batch.target, output, extractor),
            rec=rec_loss(batch.target, output),
        )
        total_g_loss(parts, weights).backward()
        expected_g = [p.grad.clone() for p in gen_copy.parameters()]

        train_step(batch, generator, discriminator, (sgd_frozen(generator), sgd_frozen(discriminator)), cfg, extractor)

        for p, g in zip(discriminator.parameters(), expected_d):
            assert torch.allclose(p.grad, g, atol=1e-6)
        for p, g in zip(generator.parameters(), expected_g):
            assert torch.allclose(p.grad, g, atol=1e-6)
        assert all(p.requires_grad for p in discriminator.parameters())


def test_each_optimizer_moves_only_its_network():
    with tempfile.TemporaryDirectory() as tmp:
        cfg = small_config(tmp)
        batch = fixed_batch(toy_store(3), [0, 1], np.random.default_rng(0))
        extractor = ToyFeatureExtractor()

        generator, discriminator = _models(cfg)
        g_before, d_before = snapshot(generator), snapshot(discriminator)
        opt_d = torch.optim.Adam(discriminator.parameters(), lr=1e-3)
        train_step(batch, generator, discriminator, (sgd_frozen(generator), opt_d), cfg, extractor)
        assert not changed(generator, g_before)
        assert changed(discriminator, d_before)

        generator, discriminator = _models(cfg)
        g_before, d_before = snapshot(generator), snapshot(discriminator)
        opt_g = torch.optim.Adam(generator.parameters(), lr=1e-3)
        train_step(batch, generator, discriminator, (opt_g, sgd_frozen(discriminator)), cfg, extractor)
        assert changed(generator, g_before)
        assert not changed(discriminator, d_before)


def test_zero_adversarial_weight_still_trains_discriminator():
    with tempfile.TemporaryDirectory() as tmp:
        cfg = small_config(tmp, weights=LossWeights(lambda_gan=0.0, lambda_perc=1.0, lambda_rec=10.0))
        batch = fixed_batch(toy_store(3), [0, 1], np.random.default_rng(0))
        generator, discriminator = _models(cfg)
        d_before = snapshot(discriminator)
        optimizers = (torch.optim.Adam(generator.parameters(), lr=1e-3),
                      torch.optim.Adam(discriminator.parameters(), lr=1e-3))
        metrics = train_step(batch, generator, discriminator, optimizers, cfg, ToyFeatureExtractor())
        assert changed(discriminator, d_before)
        assert metrics.g_adv >= 0.0
        assert np.isclose(metrics.g_total, 1.0 * metrics.perc + 10.0 * metrics.rec, rtol=1e-5)


def test_non_finite_loss_raises_without_update():
    with tempfile.TemporaryDirectory() as tmp:
        cfg = small_config(tmp)
        batch = fixed_batch(toy_store(3), [0, 2], np.random.default_rng(0))
        batch.target[1, 0, 0, 0] = float("nan")
        generator, discriminator = _models(cfg)
        g_before, d_before = snapshot(generator), snapshot(discriminator)
        optimizers = (torch.optim.Adam(generator.parameters(), lr=1e-3),
                      torch.optim.Adam(discriminator.parameters(), lr=1e-3))
        try:
            train_step(batch, generator, discriminator, optimizers, cfg, ToyFeatureExtractor(),
                       step=5, dump_dir=os.path.join(tmp, "diag"))
            assert False, "Should have raised NonFiniteLossError"
        except NonFiniteLossError as e:
            assert e.step == 5
            assert e.loss_name == "d_loss"
            assert e.batch_indices == [2]
            assert os.path.isfile(e.dump_path)
        assert not changed(generator, g_before)
        assert not changed(discriminator, d_before)


# =========================================================================
# Tests: Trainer
# =========================================================================

def test_same_seed_gives_identical_first_step():
    with tempfile.TemporaryDirectory() as tmp:
        cfg = small_config(tmp, steps=1)
        first = Trainer(cfg, store=toy_store(4), device="cpu", progress=False).fit()
        second = Trainer(cfg, store=toy_store(4), device="cpu", progress=False).fit()
        assert first[0].to_dict() == second[0].to_dict()


def test_fit_writes_log_and_checkpoints():
    with tempfile.TemporaryDirectory() as tmp:
        cfg = small_config(tmp, steps=4, output=OutputConfig(dir=tmp, checkpoint_every=2))
        trainer = Trainer(cfg, store=toy_store(4), device="cpu", progress=False)
        history = trainer.fit()

        assert [m.step for m in history] == [1, 2, 3, 4]
        assert trainer.step == 4
        for name in ("latest.pt", "step_000002.pt", "step_000004.pt"):
            assert os.path.isfile(os.path.join(tmp, name)), name
        with open(trainer.log_path) as f:
            lines = [json.loads(line) for line in f]
        assert [line["step"] for line in lines] == [1, 2, 3, 4]
        assert all(np.isfinite(line["g_total"]) and line["wall_time"] >= 0 for line in lines)
        assert trainer.fit() == []


def test_two_sample_overfit_halves_reconstruction_loss():
    with tempfile.TemporaryDirectory() as tmp:
        cfg = small_config(tmp, steps=200)
        store = toy_store(2)
        trainer = Trainer(cfg, store=store, device="cpu", progress=False)
        batch = fixed_batch(store, [0, 1], np.random.default_rng(0))
        history = trainer.fit(batch=batch)
        assert len(history) == 200
        assert history[-1].rec <= 0.5 * history[0].rec


def test_four_sample_overfit_reaches_low_reconstruction_loss():
    with tempfile.TemporaryDirectory() as tmp:
        cfg = small_config(tmp, steps=500, batch_size=4)
        store = toy_store(4)
        trainer = Trainer(cfg, store=store, device="cpu", progress=False)
        batch = fixed_batch(store, [0, 1, 2, 3], np.random.default_rng(0))
        history = trainer.fit(batch=batch)

        assert history[-1].rec < 0.05
        restored = trainer.predict(batch)
        assert float(torch.mean(torch.abs(restored - batch.target))) < 0.03


def test_ablations_train_with_finite_losses():
    ablations = [
        Ablations(use_cf=False),
        Ablations(use_reference_branch=False),
        Ablations(use_perc_loss=False),
    ]
    for ablation in ablations:
        with tempfile.TemporaryDirectory() as tmp:
            cfg = small_config(tmp, steps=50, ablations=ablation)
            trainer = Trainer(cfg, store=toy_store(4), device="cpu", progress=False)
            history = trainer.fit()
            assert len(history) == 50
            for m in history:
                values = [m.d_loss, m.g_adv, m.perc, m.rec, m.g_total]
                assert all(np.isfinite(v) for v in values), f"{ablation}: {m}"
            if not ablation.use_perc_loss:
                assert trainer.extractor is None
                assert all(m.perc == 0.0 for m in history)


def test_trainer_without_store_uses_toy_video():
    with tempfile.TemporaryDirectory() as tmp:
        cfg = small_config(tmp, steps=1, data=DataConfig(toy_frames=3, toy_videos=2, deterministic=True))
        trainer = Trainer(cfg, device="cpu", progress=False)
        assert len(trainer.store) == 6
        assert trainer.store.videos == ["toy_00", "toy_01"]


def test_trainer_loads_one_video_per_directory_pair():
    with tempfile.TemporaryDirectory() as tmp:
        pairs = [
            write_frame_store(toy_store(3, seed=seed), os.path.join(tmp, name))
            for seed, name in ((0, "first"), (1, "second"))
        ]
        data = DataConfig(
            frames=[f for f, _ in pairs],
            landmarks=[l for _, l in pairs],
            deterministic=True,
        )
        trainer = Trainer(small_config(os.path.join(tmp, "out"), steps=1, data=data),
                          device="cpu", progress=False)
        assert len(trainer.store) == 6
        assert trainer.store.videos == [os.path.normpath(f) for f, _ in pairs]
        # Both sidecar directories hold "00000.txt"; videos stay apart
        for index in range(len(trainer.store)):
            candidates = reference_candidates(trainer.store, index)
            assert all(trainer.store[c].video == trainer.store[index].video for c in candidates)
        history = trainer.fit()
        assert len(history) == 1


def test_prefetched_stream_matches_serial_stream():
    with tempfile.TemporaryDirectory() as tmp:
        store = toy_store(4)
        serial = Trainer(small_config(tmp), store=store, device="cpu", progress=False)
        threaded = Trainer(
            small_config(tmp, data=DataConfig(toy_frames=4, deterministic=False)),
            store=store, device="cpu", progress=False,
        )
        for _ in range(3):
            assert next(serial.batches()).indices == next(threaded.batches()).indices


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
