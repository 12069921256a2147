"""
Model archive: one self-describing JSON document holding the architecture,
normalizer statistics, every parameter tensor and the training metadata.

Tensors are stored as base64 of their little-endian float64 bytes, so a
save/load round trip is bitwise exact. Output bytes are canonical
(sorted keys, fixed separators), which makes the sha256 digest a stable
fingerprint of a training run.
"""

import base64
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union

import numpy as np

from .autoencoder import AutoEncoder
from .dataset import Normalizer
from .errors import DataError
from .fileio import atomic_write_bytes
from .generator import DEFAULT_ARCHITECTURE, MmdConfig, ScenarioGenerator
from .layers import Layer, build_layer

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
TENSOR_DTYPE = "<f8"


def encode_tensor(array: np.ndarray) -> dict:
    data = np.ascontiguousarray(array, dtype=TENSOR_DTYPE)
    return {
        "shape": list(data.shape),
        "dtype": TENSOR_DTYPE,
        "data": base64.b64encode(data.tobytes()).decode("ascii"),
    }


def decode_tensor(payload: dict) -> np.ndarray:
    if payload.get("dtype") != TENSOR_DTYPE:
        raise DataError(f"Unsupported tensor dtype: {payload.get('dtype')}")
    raw = base64.b64decode(payload["data"], validate=True)
    shape = tuple(int(s) for s in payload["shape"])
    expected = int(np.prod(shape, dtype=np.int64)) * 8
    if len(raw) != expected:
        raise DataError(f"Tensor payload holds {len(raw)} bytes, shape {list(shape)} needs {expected}")
    return np.frombuffer(raw, dtype=TENSOR_DTYPE).reshape(shape).astype(np.float64)


@dataclass
class ModelArchive:
    """Everything needed to regenerate scenarios from a trained run."""
    architecture: dict
    normalizer: Normalizer
    tensors: dict[str, np.ndarray]
    metadata: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    @classmethod
    def from_models(
        cls,
        ae: AutoEncoder,
        gen: ScenarioGenerator,
        normalizer: Normalizer,
        metadata: dict
    ) -> "ModelArchive":
        tensors = {**ae.parameters(), **gen.parameters()}
        architecture = {
            "autoencoder": ae.describe(),
            "generator": gen.describe(),
            "mmd": {
                "bandwidth": gen.mmd_config.bandwidth,
                "batch_size": gen.mmd_config.batch_size,
                "estimator": gen.mmd_config.estimator,
                "consistency": gen.mmd_config.consistency,
            } if gen.mmd_config else None,
        }
        return cls(
            architecture=architecture,
            normalizer=normalizer,
            tensors={k: np.array(v, copy=True) for k, v in tensors.items()},
            metadata=dict(metadata),
        )

    def _build(self, descriptors: list[dict], prefix: str) -> list[Layer]:
        layers = []
        for i, descriptor in enumerate(descriptors):
            params = {
                key.rsplit(".", 1)[1]: np.array(value, copy=True)
                for key, value in self.tensors.items()
                if key.rsplit(".", 1)[0] == f"{prefix}.{i}"
            }
            try:
                layers.append(build_layer(descriptor, params))
            except (KeyError, ValueError) as e:
                raise DataError(f"Archive layer {prefix}.{i} ({descriptor.get('kind')}): {e}") from e
        return layers

    def build_autoencoder(self) -> AutoEncoder:
        """Trained, frozen auto-encoder."""
        try:
            spec = self.architecture["autoencoder"]
            encoder = self._build(spec["encoder"], "encoder")
            decoder = self._build(spec["decoder"], "decoder")
        except (KeyError, TypeError) as e:
            raise DataError(f"Archive auto-encoder section is incomplete: {e}") from e
        try:
            ae = AutoEncoder(encoder, decoder, trained=True)
        except ValueError as e:
            raise DataError(f"Archive auto-encoder is inconsistent: {e}") from e
        ae.freeze()
        return ae

    def build_generator(self) -> ScenarioGenerator:
        try:
            spec = self.architecture["generator"]
            layers = self._build(spec["layers"], "generator")
            noise_dim = int(spec["noise_dim"])
            architecture = spec.get("architecture", DEFAULT_ARCHITECTURE)
        except (KeyError, TypeError, ValueError, AttributeError) as e:
            raise DataError(f"Archive generator section is incomplete: {e}") from e
        try:
            gen = ScenarioGenerator.from_layers(layers, noise_dim, architecture)
        except ValueError as e:
            raise DataError(f"Archive generator does not match the expected architecture: {e}") from e
        if self.architecture.get("mmd"):
            mmd = self.architecture["mmd"]
            gen.mmd_config = MmdConfig(
                float(mmd["bandwidth"]), int(mmd["batch_size"]), mmd["estimator"], float(mmd.get("consistency", 0.0))
            )
        return gen

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "architecture": self.architecture,
            "normalizer": self.normalizer.to_dict(),
            "tensors": {key: encode_tensor(value) for key, value in self.tensors.items()},
            "metadata": self.metadata,
        }

    def to_bytes(self) -> bytes:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode("utf-8")

    def digest(self) -> str:
        """sha256 of the canonical archive bytes."""
        return hashlib.sha256(self.to_bytes()).hexdigest()

    def save(self, path: Union[str, os.PathLike]) -> Path:
        target = atomic_write_bytes(path, self.to_bytes())
        logger.info(f"Saved model archive {target} ({len(self.tensors)} tensors, sha256 {self.digest()[:12]})")
        return target

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ModelArchive":
        try:
            version = int(data["format_version"])
            if version != FORMAT_VERSION:
                raise DataError(f"Unsupported archive format_version {version} (expected {FORMAT_VERSION})")
            return cls(
                architecture=data["architecture"],
                normalizer=Normalizer.from_dict(data["normalizer"]),
                tensors={key: decode_tensor(value) for key, value in data["tensors"].items()},
                metadata=data.get("metadata", {}),
                format_version=version,
            )
        except DataError:
            raise
        except (KeyError, TypeError, ValueError, AttributeError) as e:
            raise DataError(f"Corrupt model archive: {e}") from e

    @classmethod
    def load(cls, path: Union[str, os.PathLike]) -> "ModelArchive":
        path = Path(path)
        try:
            data = json.loads(path.read_bytes())
        except OSError as e:
            raise DataError(f"Cannot read model archive {path}: {e}") from e
        except (json.JSONDecodeError, UnicodeDecodeError) as e:
            raise DataError(f"Model archive {path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise DataError(f"Model archive {path} is not a JSON object")

        archive = cls.from_dict(data)
        logger.info(f"Loaded model archive {path.name} ({len(archive.tensors)} tensors)")
        return archive


def save_archive(archive: ModelArchive, path: Union[str, os.PathLike]) -> Path:
    return archive.save(path)


def load_archive(path: Union[str, os.PathLike]) -> ModelArchive:
    return ModelArchive.load(path)
