"""Shared fixtures: building manifest trees of tensor dumps on disk."""

import numpy as np
import pytest

from protoseg import write_tensor
from protoseg.reports import to_json_text


@pytest.fixture
def manifest_builder(tmp_path):
    """Write a manifest plus dumps and return the manifest path.

    ``images`` is a list of dicts with keys: id, gt ((H, W) ints or None),
    output ((H, W) ints or floats), layers (list of (layer_index, array)),
    input (optional array, defaults to the output as float).
    """

    def build(images, global_seed=0):
        doc = {"version": 1, "global_seed": global_seed, "images": []}
        for img in images:
            img_dir = tmp_path / img["id"]
            img_dir.mkdir()
            entry = {"id": img["id"], "layers": []}
            output = np.asarray(img["output"])
            if output.dtype.kind == "f":
                write_tensor(img_dir / "output.npy", output.astype(np.float32))
            else:
                write_tensor(img_dir / "output.npy", output)
            entry["output"] = f"{img['id']}/output.npy"
            x = img.get("input")
            if x is None:
                x = output.astype(np.float32)
            write_tensor(img_dir / "input.npy", np.asarray(x, dtype=np.float32))
            entry["input"] = f"{img['id']}/input.npy"
            if img.get("gt") is not None:
                write_tensor(img_dir / "gt.npy", np.asarray(img["gt"]))
                entry["ground_truth"] = f"{img['id']}/gt.npy"
            for layer_index, values in img["layers"]:
                arr = np.asarray(values, dtype=np.float32)
                if arr.ndim == 2:
                    arr = arr[:, :, None]
                rel = f"{img['id']}/layer{layer_index}.npy"
                write_tensor(tmp_path / rel, arr)
                entry["layers"].append(
                    {"layer_index": layer_index, "channels": arr.shape[2], "feature": rel}
                )
            doc["images"].append(entry)
        path = tmp_path / "manifest.json"
        path.write_text(to_json_text(doc))
        return path

    return build
