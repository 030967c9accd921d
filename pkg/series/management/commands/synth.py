import json

from representations.exceptions import ConfigError
from representations.management.base import TRepCommand
from series.datasets import save_csv
from series.synthetic import KINDS, synth


def parse_param(text):
    """``key=value`` where value is read as JSON when possible (``3``, ``0.5``, ``[1, 2]``)."""
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise ConfigError(f"--param expects key=value, got {text!r}")
    try:
        return key, json.loads(raw)
    except json.JSONDecodeError:
        return key, raw


class Command(TRepCommand):
    help = "Writes a seeded synthetic dataset as CSV"

    def add_arguments(self, parser):
        parser.add_argument("--kind", choices=KINDS, required=True)
        parser.add_argument("--out", required=True)
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--param", action="append", default=[], help="generator parameter key=value")

    def run(self, **options):
        params = dict(parse_param(text) for text in options["param"])
        dataset = synth(options["kind"], params, seed=options["seed"])
        save_csv(dataset, options["out"])
        return (
            f"Wrote {options['kind']} ({dataset.n_instances} x {dataset.length} x {dataset.n_channels}) "
            f"to {options['out']}"
        )
