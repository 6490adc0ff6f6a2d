import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Tuple

import numpy as np
import orjson

from utils.errors import ContractError

from .layers import Parameter

logger = logging.getLogger(__name__)

PARAMS_FILE = "params.npz"
MANIFEST_FILE = "manifest.json"


def save_checkpoint(directory: Path, named: Iterable[Tuple[str, Parameter]], manifest: Mapping[str, Any]) -> None:
    """parameters go to an npz (bit exact, names and shapes self-describing); flags to json"""
    directory.mkdir(parents=True, exist_ok=True)
    arrays = {name: p.data for name, p in named}
    with open(directory / PARAMS_FILE, "wb") as f:
        np.savez(f, **arrays)

    listing = dict(manifest)
    listing["parameters"] = {name: list(a.shape) for name, a in arrays.items()}
    (directory / MANIFEST_FILE).write_bytes(orjson.dumps(listing, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS))
    logger.info("saved %d parameter arrays to %s", len(arrays), directory)


def read_manifest(directory: Path) -> Dict[str, Any]:
    path = directory / MANIFEST_FILE
    if not path.is_file():
        return {}
    return orjson.loads(path.read_bytes())


def load_checkpoint(directory: Path, named: Iterable[Tuple[str, Parameter]]) -> Dict[str, Any]:
    """restore parameter values in place; returns the manifest"""
    with np.load(directory / PARAMS_FILE) as stored:
        for name, p in named:
            if name not in stored.files:
                raise ContractError(f"checkpoint {directory} has no parameter {name}")
            value = stored[name]
            if value.shape != p.shape:
                raise ContractError(f"checkpoint shape for {name} is {value.shape}, model expects {p.shape}")
            p.data = value.astype(p.data.dtype, copy=True)
    return read_manifest(directory)
