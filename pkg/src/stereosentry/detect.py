"""Detection types, a ground-truth oracle, and a color-blob detector.

No neural network runs here. The oracle degrades exact ground truth into
realistic detector output (dropout, box jitter, false positives) with full
determinism, which is what the tracking tests need. The blob detector is a
classic HSV threshold + connected components fallback for real images.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

# the 20 detectable classes, in the conventional order
VOC_CLASSES = (
    "aeroplane", "bicycle", "bird", "boat", "bottle",
    "bus", "car", "cat", "chair", "cow",
    "diningtable", "dog", "horse", "motorbike", "person",
    "pottedplant", "sheep", "sofa", "train", "tvmonitor",
)


@dataclass(frozen=True)
class LabelVocabulary:
    classes: tuple = VOC_CLASSES

    def __post_init__(self):
        if not self.classes:
            raise ValueError("vocabulary must be non-empty")
        if len(set(self.classes)) != len(self.classes):
            raise ValueError("vocabulary entries must be unique")

    def __contains__(self, label):
        return label in self.classes

    def __iter__(self):
        return iter(self.classes)

    def __len__(self):
        return len(self.classes)


@dataclass(frozen=True)
class Detection:
    label: str
    confidence: float
    bbox: tuple  # (u_min, v_min, u_max, v_max) pixels
    distance_m: float = None

    def __post_init__(self):
        u0, v0, u1, v1 = self.bbox
        if not (u0 < u1 and v0 < v1):
            raise ValueError("bbox must have positive extent")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must lie in [0, 1]")

    @property
    def center(self):
        u0, v0, u1, v1 = self.bbox
        return ((u0 + u1) / 2.0, (v0 + v1) / 2.0)

    @property
    def area(self):
        u0, v0, u1, v1 = self.bbox
        return (u1 - u0) * (v1 - v0)

    def to_dict(self):
        return {
            "label": self.label,
            "confidence": round(float(self.confidence), 4),
            "bbox": [round(float(x), 2) for x in self.bbox],
            "distance_m": None
            if self.distance_m is None or not np.isfinite(self.distance_m)
            else round(float(self.distance_m), 3),
        }


@dataclass(frozen=True)
class OracleConfig:
    """Degradation knobs for detect_oracle. frame_index is part of the
    random stream key so every frame gets fresh yet reproducible noise."""

    jitter_px: float = 0.0
    dropout_prob: float = 0.0
    false_positive_rate: float = 0.0
    seed: int = 1
    frame_index: int = 0
    width: int = 640
    height: int = 480
    vocabulary: LabelVocabulary = field(default_factory=LabelVocabulary)

    def __post_init__(self):
        if not 0.0 <= self.dropout_prob <= 1.0:
            raise ValueError("dropout_prob must lie in [0, 1]")
        if self.false_positive_rate < 0 or self.jitter_px < 0:
            raise ValueError("rates must be non-negative")


def _clip_box(bbox, width, height):
    u0, v0, u1, v1 = bbox
    u0, u1 = sorted((u0, u1))
    v0, v1 = sorted((v0, v1))
    u0, u1 = max(u0, 0.0), min(u1, float(width))
    v0, v1 = max(v0, 0.0), min(v1, float(height))
    if u1 - u0 < 1e-6 or v1 - v0 < 1e-6:
        return None
    return (u0, v0, u1, v1)


def detect_oracle(gt, cfg: OracleConfig):
    """Ground truth through a noise channel; deterministic in
    (seed, frame_index).

    With every knob at zero the ground truth passes through untouched at
    confidence 1.0.
    """
    if cfg.jitter_px == 0 and cfg.dropout_prob == 0 and cfg.false_positive_rate == 0:
        return [replace(d, confidence=1.0) for d in gt]

    rng = np.random.default_rng([int(cfg.seed), int(cfg.frame_index)])
    out = []
    keep = rng.random(len(gt)) >= cfg.dropout_prob
    for det, kept in zip(gt, keep):
        jitter = rng.normal(0.0, cfg.jitter_px, 4) if cfg.jitter_px else np.zeros(4)
        conf = rng.uniform(0.6, 1.0)
        if not kept:
            continue
        bbox = _clip_box(np.asarray(det.bbox) + jitter, cfg.width, cfg.height)
        if bbox is None:
            continue
        out.append(replace(det, bbox=bbox, confidence=float(conf)))

    for _ in range(rng.poisson(cfg.false_positive_rate)):
        label = cfg.vocabulary.classes[rng.integers(len(cfg.vocabulary.classes))]
        cu = rng.uniform(0, cfg.width)
        cv = rng.uniform(0, cfg.height)
        bw = rng.uniform(8, 0.3 * cfg.width)
        bh = rng.uniform(8, 0.3 * cfg.height)
        conf = rng.uniform(0.3, 0.6)
        bbox = _clip_box(
            (cu - bw / 2, cv - bh / 2, cu + bw / 2, cv + bh / 2),
            cfg.width,
            cfg.height,
        )
        if bbox is not None:
            out.append(Detection(label=label, confidence=float(conf), bbox=bbox))
    return out


@dataclass(frozen=True)
class BlobConfig:
    """HSV gate for the color-blob detector. Hue is in degrees and the
    (lo, hi) range may wrap through 0 (e.g. red: 345..15)."""

    hue_lo: float = 345.0
    hue_hi: float = 15.0
    min_saturation: float = 0.35
    min_value: float = 0.15
    min_area_px: int = 50
    label: str = "person"


def _rgb_to_hsv(rgb):
    """Vectorized RGB [0,255] -> (hue deg, sat [0,1], val [0,1])."""
    px = rgb.astype(np.float32) / 255.0
    r, g, b = px[..., 0], px[..., 1], px[..., 2]
    v = px.max(axis=-1)
    c = v - px.min(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        hr = np.where(c > 0, ((g - b) / c) % 6.0, 0.0)
        hg = np.where(c > 0, (b - r) / c + 2.0, 0.0)
        hb = np.where(c > 0, (r - g) / c + 4.0, 0.0)
    h = np.where(v == r, hr, np.where(v == g, hg, hb)) * 60.0
    s = np.where(v > 0, c / np.where(v > 0, v, 1.0), 0.0)
    return h % 360.0, s, v


def detect_blobs(img, cfg: BlobConfig):
    """Threshold + 4-connected components on an RGB image."""
    px = img.pixels if hasattr(img, "pixels") else np.asarray(img)
    if px.ndim != 3 or px.shape[2] != 3:
        raise ValueError("blob detection needs a 3-channel image")
    h, s, v = _rgb_to_hsv(px)
    if cfg.hue_lo <= cfg.hue_hi:
        hue_ok = (h >= cfg.hue_lo) & (h <= cfg.hue_hi)
    else:  # wrapped range
        hue_ok = (h >= cfg.hue_lo) | (h <= cfg.hue_hi)
    mask = hue_ok & (s >= cfg.min_saturation) & (v >= cfg.min_value)

    structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])  # 4-connectivity
    labels, count = ndimage.label(mask, structure=structure)
    out = []
    for comp, slices in enumerate(ndimage.find_objects(labels, count), start=1):
        if slices is None:
            continue
        slc_v, slc_u = slices
        area = int(np.count_nonzero(labels[slc_v, slc_u] == comp))
        if area < cfg.min_area_px:
            continue
        bbox = (
            float(slc_u.start), float(slc_v.start),
            float(slc_u.stop), float(slc_v.stop),
        )
        bbox_area = (bbox[2] - bbox[0]) * (bbox[3] - bbox[1])
        out.append(
            Detection(label=cfg.label, confidence=float(area / bbox_area), bbox=bbox)
        )
    return out
