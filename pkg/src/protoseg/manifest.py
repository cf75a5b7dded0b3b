"""Versioned analysis manifest: which images, which layers, which dump files.

A manifest is a JSON document with ``version`` 1, a ``global_seed``, and an
``images`` list; every image carries its own ``layers`` list with strictly
increasing ``layer_index``.  All paths are relative to the manifest file's
directory and must resolve at load time.  Unknown keys are tolerated so
producers can attach free-text metadata.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import DanglingReferenceError, SchemaViolationError


@dataclass(frozen=True)
class LayerRef:
    layer_index: int
    channels: int
    feature: Path


@dataclass(frozen=True)
class ImageRef:
    image_id: str
    input: Path
    output: Path
    ground_truth: Path | None
    layers: tuple[LayerRef, ...]


@dataclass(frozen=True)
class AnalysisManifest:
    version: int
    global_seed: int
    images: tuple[ImageRef, ...]
    root: Path

    def image_ids(self) -> list[str]:
        return [img.image_id for img in self.images]


def _require(mapping, key, path, kind, allow_none=False):
    if key not in mapping:
        raise SchemaViolationError(f"{path}.{key}" if path else key, "missing required field")
    value = mapping[key]
    if value is None and allow_none:
        return None
    if kind is int and isinstance(value, bool):
        value = None  # bools are not acceptable ints
    if not isinstance(value, kind):
        field = f"{path}.{key}" if path else key
        raise SchemaViolationError(field, f"expected {kind.__name__}")
    return value


def _load_layer(entry, path: str, root: Path) -> LayerRef:
    if not isinstance(entry, dict):
        raise SchemaViolationError(path, "expected object")
    index = _require(entry, "layer_index", path, int)
    if index < 0:
        raise SchemaViolationError(f"{path}.layer_index", "must be >= 0")
    channels = _require(entry, "channels", path, int)
    if channels < 1:
        raise SchemaViolationError(f"{path}.channels", "must be >= 1")
    feature = _require(entry, "feature", path, str)
    if not feature:
        raise SchemaViolationError(f"{path}.feature", "must be non-empty")
    return LayerRef(layer_index=index, channels=channels, feature=root / feature)


def _load_image(entry, path: str, root: Path) -> ImageRef:
    if not isinstance(entry, dict):
        raise SchemaViolationError(path, "expected object")
    image_id = _require(entry, "id", path, str)
    if not image_id:
        raise SchemaViolationError(f"{path}.id", "must be non-empty")
    input_rel = _require(entry, "input", path, str)
    output_rel = _require(entry, "output", path, str)
    truth_rel = entry.get("ground_truth")
    if truth_rel is not None and not isinstance(truth_rel, str):
        raise SchemaViolationError(f"{path}.ground_truth", "expected string or null")
    layers_raw = _require(entry, "layers", path, list)
    if not layers_raw:
        raise SchemaViolationError(f"{path}.layers", "must list at least one layer")
    layers = tuple(
        _load_layer(layer, f"{path}.layers[{i}]", root) for i, layer in enumerate(layers_raw)
    )
    for i in range(1, len(layers)):
        if layers[i].layer_index <= layers[i - 1].layer_index:
            raise SchemaViolationError(
                f"{path}.layers[{i}].layer_index", "layer_index must be strictly increasing"
            )
    return ImageRef(
        image_id=image_id,
        input=root / input_rel,
        output=root / output_rel,
        ground_truth=root / truth_rel if truth_rel else None,
        layers=layers,
    )


def load_manifest(path) -> AnalysisManifest:
    """Load and validate a manifest document; paths resolve against its directory."""
    manifest_path = Path(path)
    try:
        document = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaViolationError("", f"not valid JSON: {exc}") from None
    if not isinstance(document, dict):
        raise SchemaViolationError("", "document must be an object")
    version = _require(document, "version", "", int)
    if version != 1:
        raise SchemaViolationError("version", f"unsupported version {version}, expected 1")
    seed = _require(document, "global_seed", "", int)
    if seed < 0:
        raise SchemaViolationError("global_seed", "must be >= 0")
    images_raw = _require(document, "images", "", list)
    root = manifest_path.parent
    images = tuple(
        _load_image(entry, f"images[{i}]", root) for i, entry in enumerate(images_raw)
    )
    seen: dict[str, int] = {}
    for i, img in enumerate(images):
        if img.image_id in seen:
            raise SchemaViolationError(f"images[{i}].id", f"duplicate image id {img.image_id!r}")
        seen[img.image_id] = i
    for i, img in enumerate(images):
        refs = [("input", img.input), ("output", img.output)]
        if img.ground_truth is not None:
            refs.append(("ground_truth", img.ground_truth))
        for field, ref in refs:
            if not ref.is_file():
                raise DanglingReferenceError(f"images[{i}].{field}", str(ref))
        for j, layer in enumerate(img.layers):
            if not layer.feature.is_file():
                raise DanglingReferenceError(f"images[{i}].layers[{j}].feature", str(layer.feature))
    return AnalysisManifest(version=version, global_seed=seed, images=images, root=root)
