import numpy as np
import pandas as pd

from representations.encoder import GRANULARITIES
from representations.management.base import TRepCommand
from representations.trep import TRep
from series.datasets import ID_COLUMN, load_csv


class Command(TRepCommand):
    help = "Encodes a CSV dataset with a trained checkpoint and writes the representations as CSV"

    def add_arguments(self, parser):
        parser.add_argument("--ckpt", required=True)
        parser.add_argument("--data", required=True)
        parser.add_argument("--granularity", choices=GRANULARITIES, default="timestep")
        parser.add_argument("--window", type=int)
        parser.add_argument("--out", required=True)
        parser.add_argument("--batch-size", type=int, default=64)

    def run(self, **options):
        model = TRep.load(options["ckpt"])
        dataset = model.prepare(load_csv(options["data"]))
        representation = model.encode(
            dataset.values,
            granularity=options["granularity"],
            window=options["window"],
            batch_size=options["batch_size"],
            mask=dataset.missing_mask,
        )
        values = representation.values
        n, steps, dims = values.shape
        frame = pd.DataFrame(values.reshape(n * steps, dims), columns=[f"f{i}" for i in range(dims)])
        frame.insert(0, "t", np.tile(np.arange(steps), n))
        frame.insert(0, ID_COLUMN, np.repeat(dataset.instance_ids, steps))
        frame.to_csv(options["out"], index=False, float_format="%.17g", encoding="utf-8")
        return f"Wrote {len(frame)} rows ({representation.granularity}) to {options['out']}"
