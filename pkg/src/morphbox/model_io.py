"""Model files: versioned JSON with boxes, training metadata, and the
optional scaler.

The writer is canonical: keys sorted, fixed indentation, floats rendered at
17 significant digits.  Saving the same model twice yields byte-identical
files, and 17 digits make load(save(m)) exact.
"""

import json

import numpy as np

from morphbox.core import ClassModule, Hyperbox, MpclModel
from morphbox.data import Scaler

FORMAT_VERSION = 1


class _F(float):
    # json calls repr() on floats when a Python (non-C) encoder runs
    def __repr__(self):
        return format(float(self), ".17g")


def _wrap(obj):
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, float):
        return _F(obj)
    if isinstance(obj, np.floating):
        return _F(float(obj))
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_wrap(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _wrap(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_wrap(v) for v in obj]
    return obj


def model_to_doc(model: MpclModel, metadata: dict | None = None,
                 scaler: Scaler | None = None) -> dict:
    doc = {
        "format_version": FORMAT_VERSION,
        "n_features": model.n_features,
        "modules": [
            {
                "class_id": mod.class_id,
                "boxes": [
                    {"lower": bx.lower.tolist(), "upper": bx.upper.tolist()}
                    for bx in mod.boxes
                ],
            }
            for mod in model.modules
        ],
        "warnings": list(model.warnings),
        "metadata": metadata or {},
    }
    if scaler is not None:
        doc["scaler"] = {"mean": scaler.mean.tolist(), "std": scaler.std.tolist()}
    return doc


def dumps_model(model: MpclModel, metadata: dict | None = None,
                scaler: Scaler | None = None) -> str:
    # indent forces the pure-Python encoder, which respects the float repr
    return json.dumps(_wrap(model_to_doc(model, metadata, scaler)),
                      indent=2, sort_keys=True) + "\n"


def save_model(model: MpclModel, path, metadata: dict | None = None,
               scaler: Scaler | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_model(model, metadata, scaler))


def load_model(path) -> tuple[MpclModel, dict, Scaler | None]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise ValueError(f"{path}: not a model file (missing format_version)")
    if doc["format_version"] != FORMAT_VERSION:
        raise ValueError(
            f"{path}: unsupported format_version {doc['format_version']!r}, "
            f"this build reads version {FORMAT_VERSION}"
        )
    modules = []
    for mod in doc["modules"]:
        boxes = tuple(
            Hyperbox(np.array(bx["lower"], dtype=np.float64),
                     np.array(bx["upper"], dtype=np.float64))
            for bx in mod["boxes"]
        )
        modules.append(ClassModule(boxes=boxes, class_id=int(mod["class_id"])))
    model = MpclModel(
        modules=tuple(modules),
        n_features=int(doc["n_features"]),
        warnings=tuple(doc.get("warnings", ())),
    )
    scaler = None
    if "scaler" in doc:
        scaler = Scaler(mean=np.array(doc["scaler"]["mean"], dtype=np.float64),
                        std=np.array(doc["scaler"]["std"], dtype=np.float64))
    return model, doc.get("metadata", {}), scaler
