import json
import tempfile
from pathlib import Path

from django.test import SimpleTestCase, override_settings

from representations.config import read_config, resolve_run_config, resolve_seed, write_resolved_config
from representations.exceptions import ConfigError
from representations.forms import EncoderConfigForm, TaskConfigForm, TrainConfigForm


class TrainConfigFormTests(SimpleTestCase):
    def test_defaults_are_valid(self):
        form = TrainConfigForm({})
        self.assertTrue(form.is_valid())
        self.assertEqual(form.cleaned_data["batch_size"], 16)

    def test_unknown_key_is_rejected(self):
        form = TrainConfigForm({"epochs": 3})
        self.assertFalse(form.is_valid())
        self.assertIn("epochs", form.errors.as_text())

    def test_negative_learning_rate(self):
        form = TrainConfigForm({"lr": -0.1})
        self.assertFalse(form.is_valid())
        self.assertIn("lr", form.errors)

    def test_resolve_raises_config_error(self):
        with self.assertRaises(ConfigError):
            TrainConfigForm({"batch_size": 0}).resolve()


class EncoderConfigFormTests(SimpleTestCase):
    def test_mask_probability_below_one(self):
        form = EncoderConfigForm({"mask_prob": 1.0})
        self.assertFalse(form.is_valid())
        self.assertIn("mask_prob", form.errors)

    def test_unknown_time_embedding_kind(self):
        self.assertFalse(EncoderConfigForm({"te_kind": "fourier"}).is_valid())


class TaskConfigFormTests(SimpleTestCase):
    def test_weights_must_sum_to_one(self):
        form = TaskConfigForm({"alpha_inst": 0.5})
        self.assertFalse(form.is_valid())

    def test_delta_max_is_capped(self):
        self.assertFalse(TaskConfigForm({"delta_max": 21}).is_valid())
        self.assertTrue(TaskConfigForm({"delta_max": 20}).is_valid())

    def test_reweighted_tasks(self):
        form = TaskConfigForm({"alpha_inst": 0.5, "alpha_temp": 0.5, "alpha_div": 0, "alpha_pred": 0})
        self.assertTrue(form.is_valid())

    def test_ablation_presets_share_the_dropped_weight_evenly(self):
        expected = {
            "none": (0.25, 0.25, 0.25, 0.25),
            "no_pred": (1 / 3, 1 / 3, 1 / 3, 0.0),
            "no_div": (1 / 3, 1 / 3, 0.0, 1 / 3),
            "no_new_tasks": (0.5, 0.5, 0.0, 0.0),
        }
        for name, alphas in expected.items():
            with self.subTest(ablation=name):
                tasks = TaskConfigForm({"ablation": name}).resolve()
                resolved = tuple(tasks[f"alpha_{task}"] for task in ("inst", "temp", "div", "pred"))
                for got, want in zip(resolved, alphas):
                    self.assertAlmostEqual(got, want, places=12)

    def test_ablation_conflicts_with_explicit_weights(self):
        form = TaskConfigForm({"ablation": "no_pred", "alpha_pred": 0.0})
        self.assertFalse(form.is_valid())
        self.assertFalse(TaskConfigForm({"ablation": "no_time"}).is_valid())

    def test_ablation_reaches_the_train_config(self):
        tasks = resolve_run_config({"tasks": {"ablation": "no_new_tasks"}}).train_config().tasks
        self.assertEqual(tasks.alphas, (0.5, 0.5, 0.0, 0.0))


class RunConfigTests(SimpleTestCase):
    @override_settings(TREP_SEED=None)
    def test_defaults_are_echoed(self):
        config = resolve_run_config({})
        with tempfile.TemporaryDirectory() as tmp:
            path = write_resolved_config(config, tmp)
            text = path.read_text(encoding="utf-8")
        echoed = json.loads(text)
        self.assertEqual(echoed["train"], {"batch_size": 16, "lr": 0.001, "max_epochs": 200, "seed": 0})
        self.assertEqual(echoed["encoder"]["depth"], 10)
        self.assertEqual(echoed["encoder"]["hidden_dims"], 128)
        self.assertEqual(echoed["encoder"]["output_dims"], 128)
        self.assertEqual(echoed["encoder"]["kernel_size"], 3)
        for task in ("inst", "temp", "div", "pred"):
            self.assertEqual(echoed["tasks"][f"alpha_{task}"], 0.25)
        self.assertLessEqual(echoed["tasks"]["delta_max"], 20)
        self.assertEqual(
            echoed["classify"]["c_grid"], [0.0001, 0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0, 10000.0]
        )
        self.assertEqual(
            echoed["forecast"]["ridge_alphas"], [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 500.0, 1000.0]
        )
        self.assertEqual(echoed["anomaly"]["delay"], 7)
        self.assertIn('"batch_size": 16', text)
        self.assertIn('"lr": 0.001', text)
        self.assertIn('"max_epochs": 200', text)

    def test_unknown_top_level_key(self):
        with self.assertRaises(ConfigError):
            resolve_run_config({"optimizer": "sgd"})

    def test_unknown_section_key(self):
        with self.assertRaises(ConfigError):
            resolve_run_config({"encoder": {"width": 64}})

    def test_flags_win_over_the_file(self):
        config = resolve_run_config(
            {"data": "a.csv", "train": {"max_epochs": 5}},
            overrides={"data": "b.csv", "train": {"max_epochs": 2, "lr": None}},
        )
        self.assertEqual(config.data, "b.csv")
        self.assertEqual(config.sections["train"]["max_epochs"], 2)
        self.assertEqual(config.sections["train"]["lr"], 0.001)

    def test_train_config_is_built_from_sections(self):
        config = resolve_run_config({"encoder": {"depth": 3}, "train": {"seed": 9}})
        train_config = config.train_config()
        self.assertEqual(train_config.encoder["depth"], 3)
        self.assertEqual(train_config.seed, 9)

    def test_read_config_errors(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(ConfigError):
                read_config(Path(tmp) / "missing.json")
            broken = Path(tmp) / "broken.json"
            broken.write_text("{not json", encoding="utf-8")
            with self.assertRaises(ConfigError):
                read_config(broken)


class SeedPrecedenceTests(SimpleTestCase):
    @override_settings(TREP_SEED="11")
    def test_flag_then_config_then_environment(self):
        self.assertEqual(resolve_seed(3, 5), 3)
        self.assertEqual(resolve_seed(None, 5), 5)
        self.assertEqual(resolve_seed(None, None), 11)

    @override_settings(TREP_SEED=None)
    def test_falls_back_to_zero(self):
        self.assertEqual(resolve_seed(), 0)

    @override_settings(TREP_SEED="abc")
    def test_invalid_environment_seed(self):
        with self.assertRaises(ConfigError):
            resolve_seed()
