"""Checkpoint container: a zip holding ``manifest.json`` and one raw
little-endian float64 blob per parameter under ``params/``."""

import json
import zipfile
from collections import OrderedDict

import numpy as np

from representations.exceptions import CheckpointError

FORMAT_NAME = "trep-checkpoint"
FORMAT_VERSION = 1
MANIFEST = "manifest.json"
BLOB_DTYPE = "<f8"


def save_checkpoint(path, manifest, arrays):
    entries = []
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as archive:
        for name, array in arrays.items():
            array = np.ascontiguousarray(array, dtype=BLOB_DTYPE)
            archive.writestr(f"params/{name}.bin", array.tobytes())
            entries.append({"name": name, "shape": list(array.shape), "dtype": BLOB_DTYPE})
        document = {
            "format": FORMAT_NAME,
            "format_version": FORMAT_VERSION,
            **manifest,
            "parameters": entries,
        }
        archive.writestr(MANIFEST, json.dumps(document, indent=2, sort_keys=True))


def load_checkpoint(path):
    """Return ``(manifest, OrderedDict[name -> ndarray])``."""
    try:
        with zipfile.ZipFile(path) as archive:
            manifest = json.loads(archive.read(MANIFEST).decode("utf-8"))
            if manifest.get("format") != FORMAT_NAME:
                raise CheckpointError(f"{path}: not a T-Rep checkpoint")
            if manifest.get("format_version") != FORMAT_VERSION:
                raise CheckpointError(f"{path}: unsupported format version {manifest.get('format_version')!r}")
            arrays = OrderedDict()
            for entry in manifest["parameters"]:
                raw = archive.read(f"params/{entry['name']}.bin")
                shape = tuple(entry["shape"])
                array = np.frombuffer(raw, dtype=entry["dtype"])
                if array.size != int(np.prod(shape)):
                    raise CheckpointError(f"{path}: blob for {entry['name']} has the wrong size")
                arrays[entry["name"]] = array.reshape(shape).astype(np.float64)
    except FileNotFoundError as exc:
        raise CheckpointError(f"checkpoint not found: {path}") from exc
    except (zipfile.BadZipFile, KeyError, ValueError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupted checkpoint ({exc})") from exc
    return manifest, arrays
