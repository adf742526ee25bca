"""Dataset manifest ingestion and the per-sample bundle container.

A dataset is a directory with a `manifest.json` index: one record per sample
holding the image path, the 68 landmark coordinates in source-pixel units,
the foreground-mask path, and a train/val/test split tag. Preprocessed
bundles are written one npz per sample (named arrays + a JSON metadata entry).
"""

import json
import os
from dataclasses import dataclass

import cv2
import numpy as np
import torch

from .errors import IngestionError
from .preprocessing import LandmarkSet, RegionBundle, build_region_bundle, \
    foreground_weight_map

BUNDLE_ARRAYS = ("x_real", "x_crop", "x_m", "x_f", "x_l", "x_fg", "hole_mask")


@dataclass
class Sample:
    sample_id: str
    image_path: str
    landmarks: LandmarkSet
    foreground_path: str
    split: str


def load_manifest(path):
    """Read the index; `path` may be the manifest file or its directory.
    Returns (samples, base_dir)."""
    if os.path.isdir(path):
        path = os.path.join(path, "manifest.json")
    if not os.path.isfile(path):
        raise IngestionError(f"manifest not found: {path}")
    with open(path) as fh:
        data = json.load(fh)
    base = os.path.dirname(os.path.abspath(path))
    samples = []
    for rec in data["samples"]:
        try:
            samples.append(Sample(
                sample_id=str(rec["id"]),
                image_path=rec["image"],
                landmarks=LandmarkSet(np.asarray(rec["landmarks"], dtype=np.float64)),
                foreground_path=rec["foreground_mask"],
                split=rec.get("split", "train"),
            ))
        except (KeyError, ValueError) as exc:
            raise IngestionError(
                f"bad manifest record {rec.get('id', '<unnamed>')!r}: {exc}") from exc
    return samples, base


def load_sample_arrays(sample: Sample, base_dir):
    """Read the image and foreground mask for one sample."""
    img_path = os.path.join(base_dir, sample.image_path)
    image = cv2.imread(img_path, cv2.IMREAD_COLOR)
    if image is None:
        raise IngestionError(f"sample {sample.sample_id}: cannot read image {img_path}")
    image = cv2.cvtColor(image, cv2.COLOR_BGR2RGB)
    fg_path = os.path.join(base_dir, sample.foreground_path)
    fg = cv2.imread(fg_path, cv2.IMREAD_GRAYSCALE)
    if fg is None:
        raise IngestionError(
            f"sample {sample.sample_id}: cannot read foreground mask {fg_path}")
    return image, (fg > 127).astype(np.float32)


def build_bundle_for_sample(sample: Sample, base_dir, hole, resolution,
                            fill_value=1.0, landmark_radius=None):
    image, fg = load_sample_arrays(sample, base_dir)
    return build_region_bundle(image, sample.landmarks, fg, hole, resolution,
                               fill_value=fill_value,
                               landmark_radius=landmark_radius,
                               sample_id=sample.sample_id)


def load_split(manifest_path, split, hole, resolution, fill_value=1.0,
               landmark_radius=None):
    """All bundles for one split, in manifest order."""
    samples, base = load_manifest(manifest_path)
    picked = [s for s in samples if s.split == split]
    return [build_bundle_for_sample(s, base, hole, resolution,
                                    fill_value=fill_value,
                                    landmark_radius=landmark_radius)
            for s in picked]


def write_bundle(bundle: RegionBundle, path):
    meta = {"sample_id": bundle.sample_id, "hole_label": bundle.hole_label,
            "format_version": 1}
    arrays = {name: getattr(bundle, name) for name in BUNDLE_ARRAYS}
    arrays["meta"] = np.frombuffer(json.dumps(meta, sort_keys=True).encode(),
                                   dtype=np.uint8)
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        np.savez(fh, **arrays)
    os.replace(tmp, path)


def read_bundle(path):
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        kwargs = {name: data[name] for name in BUNDLE_ARRAYS}
    return RegionBundle(sample_id=meta["sample_id"], hole_label=meta["hole_label"],
                        **kwargs)


def collate(bundles, gamma, dtype=torch.float32, device="cpu"):
    """Stack bundles into the NCHW tensors a training step consumes. Binary
    mask targets are replicated to three channels to match decoder outputs."""

    def chw(stack3):
        return torch.as_tensor(np.stack(stack3), dtype=dtype,
                               device=device).permute(0, 3, 1, 2)

    def chw1to3(stack1):
        arr = np.stack(stack1)[:, None, :, :]
        return torch.as_tensor(arr, dtype=dtype, device=device).repeat(1, 3, 1, 1)

    w_fb = np.stack([foreground_weight_map(b.x_fg, gamma) for b in bundles])
    return {
        "x_real": chw([b.x_real for b in bundles]),
        "x_crop": chw([b.x_crop for b in bundles]),
        "x_f": chw([b.x_f for b in bundles]),
        "x_m": chw1to3([b.x_m for b in bundles]),
        "x_l": chw1to3([b.x_l for b in bundles]),
        "hole_mask": torch.as_tensor(np.stack([b.hole_mask for b in bundles]),
                                     dtype=dtype, device=device),
        "w_fb": torch.as_tensor(w_fb, dtype=dtype, device=device),
    }
