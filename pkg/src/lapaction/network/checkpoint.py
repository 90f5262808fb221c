"""Checkpoint container: named float64 tensors plus the configs that shaped them.

Tensors go into a versioned ``.npz`` (bit-exact round trip); the backbone and
head configuration plus free-form metadata are serialized alongside as JSON
at ``<checkpoint>.config.json``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..errors import CheckpointMismatchError
from .config import BackboneConfig, HeadConfig
from .model import init_parameters

FORMAT_VERSION = 1
_PARAM_PREFIX = "param/"


@dataclass
class Checkpoint:
    params: dict[str, np.ndarray]
    backbone: BackboneConfig
    head: HeadConfig
    meta: dict


def _config_path(path: Path) -> Path:
    return path.with_name(path.name + ".config.json")


def save_checkpoint(
    path: str | Path,
    params: dict[str, np.ndarray],
    backbone: BackboneConfig,
    head: HeadConfig,
    meta: dict | None = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays = {_PARAM_PREFIX + k: np.asarray(v) for k, v in params.items()}
    arrays["__version__"] = np.int64(FORMAT_VERSION)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    sidecar = {
        "version": FORMAT_VERSION,
        "backbone": asdict(backbone),
        "head": asdict(head),
        "meta": meta or {},
    }
    _config_path(path).write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return path


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    try:
        sidecar = json.loads(_config_path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointMismatchError(f"cannot read checkpoint config for {path}: {exc}") from exc
    if sidecar.get("version") != FORMAT_VERSION:
        raise CheckpointMismatchError(
            f"checkpoint {path} has format version {sidecar.get('version')}, "
            f"expected {FORMAT_VERSION}"
        )
    backbone = BackboneConfig(**{**sidecar["backbone"], "stages": tuple(
        tuple(s) for s in sidecar["backbone"]["stages"]
    )})
    head = HeadConfig(**sidecar["head"])

    with np.load(path) as data:
        if int(data["__version__"]) != FORMAT_VERSION:
            raise CheckpointMismatchError(f"checkpoint {path}: tensor container version mismatch")
        params = {
            k[len(_PARAM_PREFIX) :]: data[k] for k in data.files if k.startswith(_PARAM_PREFIX)
        }

    expected = init_parameters(backbone, head, seed=0)
    if set(expected) != set(params):
        missing = sorted(set(expected) - set(params))
        extra = sorted(set(params) - set(expected))
        raise CheckpointMismatchError(
            f"checkpoint {path} params do not match its config "
            f"(missing {missing}, unexpected {extra})"
        )
    for key, ref in expected.items():
        if params[key].shape != ref.shape:
            raise CheckpointMismatchError(
                f"checkpoint {path}: tensor {key} has shape {params[key].shape}, "
                f"config implies {ref.shape}"
            )
    return Checkpoint(params=params, backbone=backbone, head=head, meta=sidecar.get("meta", {}))
