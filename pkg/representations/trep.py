import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from representations.checkpoint import load_checkpoint, save_checkpoint
from representations.encoder import EncoderConfig, Representation, TSEncoder, encode
from representations.exceptions import CheckpointError, ConfigError, DatasetError, NumericError
from representations.losses import TaskConfig, TaskHeads, hierarchical_loss
from representations.optim import Adam
from representations.sampling import make_context_pair
from series.datasets import zscore

logger = logging.getLogger(__name__)

HISTORY_FIELDS = ("step", "epoch", "level_count", "l_inst", "l_temp", "l_div", "l_pred", "combined")
FINAL_CHECKPOINT = "final.trep"
BEST_CHECKPOINT = "best.trep"
HISTORY_FILE = "history.csv"


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 16
    lr: float = 0.001
    max_epochs: int = 200
    seed: int = 0
    # EncoderConfig options; input_dims comes from the dataset
    encoder: dict = field(default_factory=dict)
    tasks: TaskConfig = field(default_factory=TaskConfig)

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 1:
            raise ConfigError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.lr < 0:
            raise ConfigError(f"lr must be >= 0, got {self.lr}")


@dataclass
class TrainingResult:
    model: "TRep"
    history: list
    final_checkpoint: Optional[Path] = None
    best_checkpoint: Optional[Path] = None
    history_path: Optional[Path] = None


class TRep:
    """Encoder plus pretext heads, trained jointly and saved as one checkpoint."""

    def __init__(self, encoder_config, task_config=None, time_scale=1.0, seed=0):
        self.encoder_config = encoder_config
        self.task_config = task_config or TaskConfig()
        self.seed = seed
        # per-channel (mean, std) of the training data, applied by prepare()
        self.normalization = None
        rng = np.random.default_rng(seed)
        self.encoder = TSEncoder(encoder_config, rng, time_scale=time_scale)
        self.heads = TaskHeads(
            encoder_config.output_dims,
            encoder_config.te_dims,
            self.task_config.head_hidden,
            rng,
        )

    @property
    def time_scale(self):
        return self.encoder.time_scale

    def named_parameters(self):
        yield from self.encoder.named_parameters(prefix="encoder.")
        yield from self.heads.named_parameters(prefix="heads.")

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def state_dict(self):
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def prepare(self, dataset):
        """Check a dataset against the model and apply the training normalization."""
        if dataset.n_channels != self.encoder_config.input_dims:
            raise DatasetError(
                f"dataset has {dataset.n_channels} channels, the checkpoint expects {self.encoder_config.input_dims}"
            )
        if self.normalization is None:
            return dataset
        return zscore(dataset, stats=self.normalization)

    def training_step(self, batch, rng, crops=None, target_cache=None):
        """Forward pass of one batch; returns the LossReport (call ``.total.backward()``).

        ``target_cache`` is handed to :func:`hierarchical_loss` so repeated calls
        can share the forecast targets of the first one.
        """
        pair = make_context_pair(batch, rng, crops=crops)
        z, tau = self.encoder(pair.view1, mode="train", rng=rng, offset=pair.a1, return_time_embedding=True)
        z_prime, tau_prime = self.encoder(
            pair.view2, mode="train", rng=rng, offset=pair.a2, return_time_embedding=True
        )
        return hierarchical_loss(
            z, z_prime, tau, tau_prime, pair, self.heads, self.task_config, rng, target_cache=target_cache
        )

    def fit(self, values, config, output_dir=None):
        values = np.asarray(values, dtype=np.float64)
        n_instances, length = values.shape[0], values.shape[1]
        if n_instances < 1 or length < 2:
            raise DatasetError(f"training needs N >= 1 and T >= 2, got N={n_instances}, T={length}")
        rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(2)[1])
        optimizer = Adam(self.parameters(), lr=config.lr)
        output_dir = Path(output_dir) if output_dir is not None else None
        result = TrainingResult(model=self, history=[])
        writer = None
        history_file = None
        if output_dir is not None:
            output_dir.mkdir(parents=True, exist_ok=True)
            result.history_path = output_dir / HISTORY_FILE
            history_file = open(result.history_path, "w", newline="", encoding="utf-8")
            writer = csv.DictWriter(history_file, fieldnames=HISTORY_FIELDS)
            writer.writeheader()

        run_settings = {
            "batch_size": config.batch_size,
            "lr": config.lr,
            "max_epochs": config.max_epochs,
            "seed": config.seed,
        }
        best = math.inf
        step = 0
        try:
            for epoch in range(1, config.max_epochs + 1):
                order = rng.permutation(n_instances)
                epoch_losses = []
                for start in range(0, n_instances, config.batch_size):
                    batch = values[order[start : start + config.batch_size]]
                    optimizer.zero_grad()
                    report = self.training_step(batch, rng)
                    step += 1
                    if not np.isfinite(report.combined):
                        raise NumericError(
                            f"non-finite loss at step {step} (epoch {epoch}): per-task {report.per_task}"
                        )
                    report.total.backward()
                    optimizer.step()
                    row = {"step": step, "epoch": epoch, **report.as_row()}
                    result.history.append(row)
                    if writer is not None:
                        writer.writerow(row)
                    epoch_losses.append(report.combined)

                epoch_loss = float(np.mean(epoch_losses))
                logger.info("epoch %d/%d loss %.6f", epoch, config.max_epochs, epoch_loss)
                if output_dir is not None and epoch_loss < best:
                    best = epoch_loss
                    result.best_checkpoint = output_dir / BEST_CHECKPOINT
                    self.save(
                        result.best_checkpoint,
                        extra={"epoch": epoch, "epoch_loss": epoch_loss},
                        config=run_settings,
                    )
        finally:
            if history_file is not None:
                history_file.close()

        if output_dir is not None:
            result.final_checkpoint = output_dir / FINAL_CHECKPOINT
            self.save(result.final_checkpoint, extra={"epoch": config.max_epochs}, config=run_settings)
        return result

    def encode(self, values, granularity="timestep", window=None, batch_size=64, offset=0, mask=None):
        values = np.asarray(values, dtype=np.float64)
        outputs = []
        for start in range(0, values.shape[0], batch_size):
            chunk_mask = None if mask is None else np.asarray(mask)[start : start + batch_size]
            z = encode(self.encoder, values[start : start + batch_size], mode="eval", offset=offset, mask=chunk_mask)
            outputs.append(z.data)
        z = np.concatenate(outputs, axis=0)
        return pool_representation(z, granularity, window)

    def encode_windows(self, series, ends, lookback, mask_last=False, full_window=False, batch_size=256):
        """Eval-mode encodings of the windows ``series[end - lookback + 1 : end + 1]``.

        Windows reaching before the start are left-padded and the padding is
        masked. Returns the last position ``[n, F]`` or the whole window
        ``[n, lookback, F]`` when ``full_window`` is set.
        """
        series = np.asarray(series, dtype=np.float64)
        if series.ndim == 1:
            series = series[:, None]
        ends = np.asarray(ends, dtype=np.int64)
        padded = np.concatenate([np.zeros((lookback - 1, series.shape[1])), series])
        steps = np.arange(lookback)
        outputs = []
        for start in range(0, len(ends), batch_size):
            chunk = ends[start : start + batch_size]
            index = chunk[:, None] + steps
            mask = index < lookback - 1
            if mask_last:
                mask[:, -1] = True
            z = encode(self.encoder, padded[index], mode="eval", offset=chunk - lookback + 1, mask=mask)
            outputs.append(z.data if full_window else z.data[:, -1])
        return np.concatenate(outputs, axis=0)

    def save(self, path, extra=None, config=None):
        manifest = {
            "architecture": {
                "encoder": self.encoder_config.as_dict(),
                "tasks": self.task_config.as_dict(),
                "time_scale": self.time_scale,
            },
            "seed": self.seed,
            "normalization": _stats_to_json(self.normalization),
            "config": config or {},
            "extra": extra or {},
        }
        save_checkpoint(path, manifest, self.state_dict())

    @classmethod
    def load(cls, path):
        manifest, arrays = load_checkpoint(path)
        try:
            architecture = manifest["architecture"]
            model = cls(
                EncoderConfig(**architecture["encoder"]),
                TaskConfig(**architecture["tasks"]),
                time_scale=architecture["time_scale"],
                seed=manifest.get("seed", 0),
            )
        except (KeyError, TypeError, ConfigError) as exc:
            raise CheckpointError(f"{path}: invalid architecture descriptor ({exc})") from exc
        model.normalization = _stats_from_json(manifest.get("normalization"), path)
        encoder_state = {k[len("encoder.") :]: v for k, v in arrays.items() if k.startswith("encoder.")}
        head_state = {k[len("heads.") :]: v for k, v in arrays.items() if k.startswith("heads.")}
        model.encoder.load_state_dict(encoder_state)
        model.heads.load_state_dict(head_state)
        return model


def pool_representation(z, granularity="timestep", window=None):
    """Reduce ``z[N, T, F]`` to the requested granularity.

    ``pooled`` splits time into ``window`` near-equal segments and max-pools
    each one, so the pooled length is exactly ``min(window, T)``.
    """
    length = z.shape[1]
    if granularity == "timestep":
        return Representation(values=z, granularity="timestep")
    if granularity == "instance":
        return Representation(values=z.max(axis=1, keepdims=True), granularity="instance", window=1)
    if granularity != "pooled":
        raise ConfigError(f"unknown granularity {granularity!r}")
    if window is None or window < 1:
        raise ConfigError(f"pooled granularity needs a window >= 1, got {window!r}")
    if window > length:
        logger.warning("pooling window %d exceeds series length %d; using timestep granularity", window, length)
        return Representation(values=z, granularity="timestep")
    bounds = (np.arange(window + 1) * length) // window
    pooled = np.stack([z[:, bounds[w] : bounds[w + 1]].max(axis=1) for w in range(window)], axis=1)
    return Representation(values=pooled, granularity="pooled", window=window)


def train(values, config, output_dir=None, normalization=None):
    """Build a model sized for ``values[N, T, C]`` and fit it.

    ``normalization`` is the ``(mean, std)`` the values were z-scored with; it
    is stored in the checkpoints so encoding can repeat it.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 3:
        raise DatasetError(f"expected a [N, T, C] array, got shape {values.shape}")
    encoder_config = EncoderConfig(input_dims=values.shape[2], **config.encoder)
    model = TRep(encoder_config, config.tasks, time_scale=values.shape[1], seed=config.seed)
    model.normalization = normalization
    return model.fit(values, config, output_dir=output_dir)


def encode_dataset(checkpoint, values, granularity="timestep", window=None):
    model = checkpoint if isinstance(checkpoint, TRep) else TRep.load(checkpoint)
    return model.encode(values, granularity=granularity, window=window)


def _stats_to_json(stats):
    if stats is None:
        return None
    mean, std = stats
    return {"mean": np.asarray(mean, dtype=np.float64).tolist(), "std": np.asarray(std, dtype=np.float64).tolist()}


def _stats_from_json(document, path):
    if document is None:
        return None
    try:
        return np.asarray(document["mean"], dtype=np.float64), np.asarray(document["std"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"{path}: invalid normalization block ({exc})") from exc
