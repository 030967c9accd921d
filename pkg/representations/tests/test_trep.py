import tempfile
import zipfile
from dataclasses import replace
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase, tag

from representations.checkpoint import FORMAT_NAME, load_checkpoint, save_checkpoint
from representations.exceptions import CheckpointError, ConfigError, DatasetError
from representations.losses import TaskConfig
from representations.tests.helpers import tiny_model
from representations.trep import TRep, TrainConfig, encode_dataset, pool_representation, train
from series.datasets import zscore
from series.synthetic import synth

TINY_ENCODER = {"output_dims": 8, "hidden_dims": 8, "te_dims": 4, "depth": 2}


class TrainConfigTests(SimpleTestCase):
    def test_defaults(self):
        config = TrainConfig()
        self.assertEqual((config.batch_size, config.lr, config.max_epochs), (16, 0.001, 200))
        self.assertEqual(config.tasks.alphas, (0.25, 0.25, 0.25, 0.25))

    def test_invalid_values(self):
        for options in ({"batch_size": 0}, {"max_epochs": 0}, {"lr": -1.0}):
            with self.assertRaises(ConfigError):
                TrainConfig(**options)


class TrainingTests(SimpleTestCase):
    def setUp(self):
        self.values = np.random.default_rng(0).normal(size=(5, 24, 2))
        self.config = TrainConfig(batch_size=2, max_epochs=2, seed=3, encoder=TINY_ENCODER, tasks=TaskConfig(head_hidden=8))

    def test_fit_writes_checkpoints_and_history(self):
        with tempfile.TemporaryDirectory() as tmp:
            result = train(self.values, self.config, output_dir=tmp)
            self.assertTrue(result.final_checkpoint.exists())
            self.assertTrue(result.best_checkpoint.exists())
            lines = result.history_path.read_text(encoding="utf-8").splitlines()
        self.assertEqual(lines[0], "step,epoch,level_count,l_inst,l_temp,l_div,l_pred,combined")
        # 5 instances in batches of 2 -> 3 steps per epoch
        self.assertEqual(len(result.history), 6)
        self.assertEqual(len(lines), 7)

    def test_same_seed_gives_identical_history(self):
        first = train(self.values, self.config).history
        second = train(self.values, self.config).history
        self.assertEqual(first, second)

    def test_different_seed_changes_history(self):
        other = TrainConfig(batch_size=2, max_epochs=2, seed=4, encoder=TINY_ENCODER, tasks=TaskConfig(head_hidden=8))
        self.assertNotEqual(train(self.values, self.config).history, train(self.values, other).history)

    def test_zero_learning_rate_keeps_parameters(self):
        model = tiny_model(input_dims=2, time_scale=24.0)
        before = model.state_dict()
        frozen = TrainConfig(batch_size=5, max_epochs=1, lr=0.0, encoder=TINY_ENCODER)
        model.fit(self.values, frozen)
        for name, value in model.state_dict().items():
            np.testing.assert_array_equal(value, before[name])

    def test_too_short_series(self):
        with self.assertRaises(DatasetError):
            train(self.values[:, :1], self.config)


class EncodingTests(SimpleTestCase):
    def setUp(self):
        self.model = tiny_model(input_dims=1, time_scale=30.0)
        self.values = np.random.default_rng(1).normal(size=(3, 30, 1))

    def test_granularities(self):
        self.assertEqual(self.model.encode(self.values).values.shape, (3, 30, 8))
        self.assertEqual(self.model.encode(self.values, "instance").values.shape, (3, 1, 8))
        pooled = self.model.encode(self.values, "pooled", window=10)
        self.assertEqual(pooled.values.shape, (3, 10, 8))
        self.assertEqual(pooled.flattened.shape, (3, 80))

    def test_pooled_window_larger_than_series_falls_back(self):
        with self.assertLogs("representations.trep", level="WARNING"):
            representation = self.model.encode(self.values[:, :6], "pooled", window=10)
        self.assertEqual(representation.values.shape, (3, 6, 8))
        self.assertEqual(representation.granularity, "timestep")

    def test_pooling_takes_segment_maxima(self):
        z = np.arange(10, dtype=float).reshape(1, 10, 1)
        np.testing.assert_array_equal(pool_representation(z, "pooled", 3).values[0, :, 0], [2.0, 5.0, 9.0])

    def test_invalid_granularity(self):
        with self.assertRaises(ConfigError):
            pool_representation(np.zeros((1, 4, 2)), "daily")
        with self.assertRaises(ConfigError):
            pool_representation(np.zeros((1, 4, 2)), "pooled", window=0)

    def test_encode_windows_matches_direct_encoding(self):
        series = self.values[0]
        last = self.model.encode_windows(series, np.array([9, 20]), lookback=10)
        full = self.model.encode(series[None, 11:21], offset=11).values[0, -1]
        np.testing.assert_allclose(last[1], full, atol=1e-12)
        self.assertEqual(self.model.encode_windows(series, np.arange(30), 6, full_window=True).shape, (30, 6, 8))

    def test_masking_the_last_step_changes_its_representation(self):
        series = self.values[0]
        unmasked = self.model.encode_windows(series, np.arange(5, 30), 8)
        masked = self.model.encode_windows(series, np.arange(5, 30), 8, mask_last=True)
        self.assertTrue(np.all(np.abs(unmasked - masked).sum(axis=1) > 0))


class CheckpointTests(SimpleTestCase):
    def setUp(self):
        self.model = tiny_model(input_dims=2, time_scale=12.0, te_kind="rbf")
        self.values = np.random.default_rng(2).normal(size=(2, 12, 2))
        self.tmp = tempfile.TemporaryDirectory()
        self.path = Path(self.tmp.name) / "model.trep"

    def tearDown(self):
        self.tmp.cleanup()

    def test_round_trip_gives_bitwise_identical_encodings(self):
        self.model.save(self.path)
        restored = TRep.load(self.path)
        np.testing.assert_array_equal(self.model.encode(self.values).values, restored.encode(self.values).values)
        np.testing.assert_array_equal(
            self.model.encode(self.values).values, encode_dataset(self.path, self.values).values
        )
        self.assertEqual(restored.encoder_config, self.model.encoder_config)
        self.assertEqual(restored.time_scale, 12.0)

    def test_manifest_describes_every_parameter(self):
        self.model.save(self.path, extra={"epoch": 3})
        manifest, arrays = load_checkpoint(self.path)
        self.assertEqual(manifest["format"], FORMAT_NAME)
        self.assertEqual(manifest["extra"], {"epoch": 3})
        self.assertEqual(list(arrays), [name for name, _ in self.model.named_parameters()])

    def test_missing_file(self):
        with self.assertRaises(CheckpointError):
            TRep.load(self.path)

    def test_corrupted_file(self):
        self.path.write_bytes(b"not a zip archive")
        with self.assertRaises(CheckpointError):
            TRep.load(self.path)

    def test_truncated_blob(self):
        save_checkpoint(self.path, {"architecture": {}}, {"w": np.ones(4)})
        with zipfile.ZipFile(self.path) as archive:
            manifest = archive.read("manifest.json")
        with zipfile.ZipFile(self.path, "w") as archive:
            archive.writestr("manifest.json", manifest)
            archive.writestr("params/w.bin", np.ones(3).tobytes())
        with self.assertRaises(CheckpointError):
            load_checkpoint(self.path)

    def test_invalid_architecture(self):
        save_checkpoint(self.path, {"architecture": {"encoder": {"input_dims": 0}}}, {})
        with self.assertRaises(CheckpointError):
            TRep.load(self.path)


@tag("slow")
class TrainingProgressTests(SimpleTestCase):
    def config(self, seed, epochs):
        return TrainConfig(batch_size=8, max_epochs=epochs, seed=seed, encoder=TINY_ENCODER, tasks=TaskConfig(head_hidden=16))

    def test_loss_falls_over_twenty_epochs(self):
        first, last = [], []
        for seed in range(5):
            dataset = zscore(synth("multiclass_sines", {"n_instances": 32, "length": 64}, seed=seed))
            history = train(dataset.values, self.config(seed, 20)).history
            first.append(np.mean([row["combined"] for row in history if row["epoch"] == 1]))
            last.append(np.mean([row["combined"] for row in history if row["epoch"] == 20]))
        self.assertLess(np.median(last), np.median(first))

    def test_nearby_forecast_targets_are_easier(self):
        t = np.arange(64, dtype=np.float64)
        phases = np.random.default_rng(0).uniform(0.0, 2.0 * np.pi, (16, 1))
        values = np.sin(2.0 * np.pi * t / 32.0 + phases)[..., None]
        losses = {1: [], 10: []}
        for seed in range(5):
            model = train(values, self.config(seed, 5)).model
            for delta_max in losses:
                model.task_config = replace(model.task_config, delta_max=delta_max)
                rng = np.random.default_rng(100 + seed)
                steps = [model.training_step(values[:8], rng).per_task["pred"] for _ in range(10)]
                losses[delta_max].append(np.mean(steps))
        self.assertLessEqual(np.median(losses[1]), np.median(losses[10]))
