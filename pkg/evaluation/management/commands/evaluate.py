import json
from pathlib import Path

import numpy as np
import pandas as pd

from evaluation.models import EvaluationReport
from evaluation.protocols import (
    AnomalyConfig,
    anomaly_eval,
    classify_eval,
    forecast_eval,
    windowed_anomaly_classify,
)
from representations.config import read_config, resolve_run_config, write_resolved_config
from representations.exceptions import ConfigError, DatasetError
from representations.management.base import TRepCommand
from representations.models import TrainingRun
from representations.trep import TRep
from series.datasets import ID_COLUMN, load_csv, train_test_split

PROTOCOLS = ("forecast", "classify", "anomaly", "windowed-anomaly")
LABEL_KIND = {"forecast": None, "classify": "instance", "anomaly": "timestep", "windowed-anomaly": "timestep"}
METRICS_FILE = "metrics.csv"
SUMMARY_FILE = "summary.json"
SCORES_FILE = "scores.csv"


class Command(TRepCommand):
    help = "Runs a downstream evaluation protocol on a trained checkpoint"

    def add_arguments(self, parser):
        parser.add_argument("--protocol", choices=PROTOCOLS, required=True)
        parser.add_argument("--config", help="JSON run config")
        parser.add_argument("--ckpt")
        parser.add_argument("--data")
        parser.add_argument("--test-data", help="separate test split (classification protocols)")
        parser.add_argument("--out", help="directory for metrics.csv and summary.json")
        parser.add_argument("--seed", type=int)
        parser.add_argument("--beta", type=float)
        parser.add_argument("--features", choices=("representation", "raw"))

    def run(self, **options):
        document = read_config(options["config"]) if options["config"] else {}
        config = resolve_run_config(
            document,
            overrides={
                "ckpt": options["ckpt"],
                "data": options["data"],
                "output_dir": options["out"],
                "anomaly": {"beta": options["beta"], "features": options["features"]},
                "windowed": {"features": options["features"]},
            },
            seed=options["seed"],
        )
        for key in ("ckpt", "data", "output_dir"):
            if not getattr(config, key):
                raise ConfigError(f"missing '{key}': set it in the config or pass it as a flag")

        protocol = options["protocol"]
        label = LABEL_KIND[protocol]
        model = TRep.load(config.ckpt)
        dataset = model.prepare(load_csv(config.data, label=label))
        test = model.prepare(load_csv(options["test_data"], label=label)) if options["test_data"] else None
        Path(config.output_dir).mkdir(parents=True, exist_ok=True)
        handler = getattr(self, f"evaluate_{protocol.replace('-', '_')}")
        rows, summary = handler(model, dataset, test, config)

        output_dir = Path(config.output_dir)
        write_resolved_config(config, output_dir)
        frame = pd.DataFrame(rows, columns=["metric", "dataset", "param", "value"])
        frame.to_csv(output_dir / METRICS_FILE, index=False, float_format="%.17g", encoding="utf-8")
        summary = {"protocol": protocol, "checkpoint": config.ckpt, "data": config.data, **summary}
        with open(output_dir / SUMMARY_FILE, "w", encoding="utf-8") as f:
            json.dump(summary, f, sort_keys=True, indent=2)
            f.write("\n")

        EvaluationReport.objects.create(
            run=TrainingRun.objects.filter(checkpoint=config.ckpt).first(),
            protocol=protocol,
            checkpoint=config.ckpt,
            data_path=config.data,
            summary=summary,
        )
        return f"{protocol}: wrote {len(frame)} metric rows to {output_dir / METRICS_FILE}"

    def _split(self, dataset, test, test_fraction, seed):
        if test is not None:
            return dataset, test
        return train_test_split(dataset, test_fraction, seed)

    def evaluate_forecast(self, model, dataset, test, config):
        section = config.sections["forecast"]
        results = forecast_eval(
            model,
            dataset.values,
            horizons=section["horizons"],
            lookback=section["lookback"],
            alphas=section["ridge_alphas"],
            valid_fraction=section["valid_fraction"],
            test_fraction=section["test_fraction"],
        )
        rows = []
        for result in results:
            for metric in ("mse", "mae", "persistence_mse", "persistence_mae"):
                rows.append((metric, config.data, result.horizon, getattr(result, metric)))
        return rows, {"horizons": [result.as_dict() for result in results]}

    def evaluate_classify(self, model, dataset, test, config):
        section = config.sections["classify"]
        if dataset.label_kind != "instance":
            raise DatasetError("classification needs one integer label per instance")
        train, test = self._split(dataset, test, section["test_fraction"], config.seed)
        result = classify_eval(
            model,
            train,
            test,
            window=section["window"],
            c_grid=section["c_grid"],
            folds=section["folds"],
            seed=config.seed,
        )
        result.pop("classifier")
        rows = [("accuracy", config.data, section["window"], result["accuracy"])]
        return rows, result

    def evaluate_anomaly(self, model, dataset, test, config):
        section = dict(config.sections["anomaly"])
        if dataset.label_kind != "timestep":
            raise DatasetError("anomaly detection needs per-timestep labels")
        beta_grid = section.pop("beta_grid")
        valid_fraction = section.pop("valid_fraction")
        anomaly_config = AnomalyConfig(**section)
        rows, per_instance, scores = [], [], []
        for i in range(dataset.n_instances):
            result = anomaly_eval(
                model,
                dataset.values[i],
                dataset.labels[i],
                anomaly_config,
                beta_grid=beta_grid,
                valid_fraction=valid_fraction,
            )
            stream = result.pop("stream")
            instance_id = dataset.instance_ids[i].item()
            for row in stream.rows():
                scores.append({ID_COLUMN: instance_id, **row})
            per_instance.append({"instance_id": instance_id, **result})
            for metric in ("f1", "precision", "recall"):
                rows.append((metric, config.data, result["beta"], result[metric]))

        pd.DataFrame(scores).to_csv(
            Path(config.output_dir) / SCORES_FILE, index=False, float_format="%.17g", encoding="utf-8"
        )
        summary = {
            "f1": float(np.mean([r["f1"] for r in per_instance])),
            "delay": anomaly_config.delay,
            "instances": per_instance,
        }
        return rows, summary

    def evaluate_windowed_anomaly(self, model, dataset, test, config):
        section = config.sections["windowed"]
        train, test = self._split(dataset, test, section["test_fraction"], config.seed)
        result = windowed_anomaly_classify(
            model,
            train,
            test,
            window=section["window"],
            c_grid=section["c_grid"],
            folds=section["folds"],
            seed=config.seed,
            features=section["features"],
        )
        rows = [
            ("f1", config.data, section["window"], result["f1"]),
            ("accuracy", config.data, section["window"], result["accuracy"]),
        ]
        return rows, result
