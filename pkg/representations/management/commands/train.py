from pathlib import Path

from representations.config import read_config, resolve_run_config, write_resolved_config
from representations.exceptions import ConfigError
from representations.losses import ABLATIONS
from representations.management.base import TRepCommand
from representations.models import TrainingRun
from representations.time_embedding import TIME_EMBEDDING_KINDS
from representations.trep import train
from series.datasets import load_csv, zscore


class Command(TRepCommand):
    help = "Trains a T-Rep encoder on a CSV dataset and writes checkpoints and a loss history"

    def add_arguments(self, parser):
        parser.add_argument("--config", help="JSON run config")
        parser.add_argument("--data", help="dataset CSV (overrides the config)")
        parser.add_argument("--output-dir", help="directory for checkpoints and history")
        parser.add_argument("--name", help="name of the run record")
        parser.add_argument("--seed", type=int)
        parser.add_argument("--epochs", type=int)
        parser.add_argument("--batch-size", type=int)
        parser.add_argument("--lr", type=float)
        parser.add_argument(
            "--te-kind", choices=TIME_EMBEDDING_KINDS, help="time embedding (mlp for classification runs, else time2vec)"
        )
        parser.add_argument("--ablation", choices=tuple(ABLATIONS), help="drop pretext tasks and reweight the rest evenly")

    def run(self, **options):
        document = read_config(options["config"]) if options["config"] else {}
        config = resolve_run_config(
            document,
            overrides={
                "data": options["data"],
                "output_dir": options["output_dir"],
                "name": options["name"],
                "train": {
                    "max_epochs": options["epochs"],
                    "batch_size": options["batch_size"],
                    "lr": options["lr"],
                },
                "encoder": {"te_kind": options["te_kind"]},
                "tasks": {"ablation": options["ablation"]},
            },
            seed=options["seed"],
        )
        if not config.data:
            raise ConfigError("no dataset given: set 'data' in the config or pass --data")
        if not config.output_dir:
            raise ConfigError("no output directory given: set 'output_dir' or pass --output-dir")

        dataset = zscore(load_csv(config.data))
        write_resolved_config(config, config.output_dir)
        result = train(
            dataset.values,
            config.train_config(),
            output_dir=config.output_dir,
            normalization=(dataset.channel_mean, dataset.channel_std),
        )

        final_loss = result.history[-1]["combined"] if result.history else None
        TrainingRun.objects.create(
            name=config.name or Path(config.output_dir).name,
            seed=config.seed,
            config=config.as_dict(),
            data_path=config.data,
            output_dir=config.output_dir,
            checkpoint=str(result.final_checkpoint),
            history=str(result.history_path),
            final_loss=final_loss,
        )
        return f"Trained {len(result.history)} steps; checkpoint written to {result.final_checkpoint}"
