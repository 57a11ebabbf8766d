"""Rectified stereo: remapping, block matching, depth, visualization.

The matcher is plain SAD block matching over a horizontal search range,
hardened by a uniqueness ratio, left-right consistency, and parabolic
sub-pixel refinement. It is deliberately simple; the cameras are close
together and the ranges of interest are a few meters, where this is
enough.
"""

from dataclasses import dataclass

import numpy as np

from . import imgio
from ._match import sad_disparity
from .camera_model import ImageBuffer

# disparities below this are too flat to invert into a finite distance
MIN_DISPARITY_PX = 0.5

DEFAULT_BLOCK = 9
DEFAULT_MAX_DISPARITY = 64
DEFAULT_UNIQUENESS = 0.85


@dataclass(frozen=True)
class DisparityMap:
    """Dense sub-pixel disparities in pixels; NaN marks invalid."""

    values: np.ndarray
    d_max: int
    block: int

    @property
    def invalid_fraction(self):
        return float(np.isnan(self.values).mean())

    def save(self, path):
        return imgio.save_disparity(self.values, path, self.d_max, self.block)

    @classmethod
    def load(cls, path):
        values, meta = imgio.load_disparity(path)
        return cls(values.astype(np.float32), int(meta["max_d"]), int(meta["block"]))


@dataclass(frozen=True)
class DepthMap:
    """Metric depths along the optical axis in meters; NaN marks invalid."""

    values: np.ndarray
    focal_px: float
    baseline_m: float


def _as_gray_array(img):
    if isinstance(img, ImageBuffer):
        return img.to_gray().pixels
    img = np.asarray(img)
    if img.ndim == 3:
        return ImageBuffer(img).to_gray().pixels
    return img


def match_disparity(
    left,
    right,
    d_max=DEFAULT_MAX_DISPARITY,
    block=DEFAULT_BLOCK,
    uniqueness=DEFAULT_UNIQUENESS,
):
    """SAD block matching on a rectified pair; see DisparityMap.

    Accepts ImageBuffers or arrays; color inputs are converted to luma.
    """
    l = _as_gray_array(left)
    r = _as_gray_array(right)
    if l.shape != r.shape:
        raise ValueError("stereo pair shapes differ")
    if block < 3 or block % 2 == 0:
        raise ValueError("block must be odd and >= 3")
    if not 1 <= d_max < l.shape[1]:
        raise ValueError("d_max must be in [1, width)")
    values = sad_disparity(
        np.ascontiguousarray(l, dtype=np.uint8),
        np.ascontiguousarray(r, dtype=np.uint8),
        int(d_max),
        int(block),
        np.float32(uniqueness),
    )
    return DisparityMap(values=values, d_max=int(d_max), block=int(block))


def depth_from_disparity(dmap: DisparityMap, focal_px, baseline_m) -> DepthMap:
    """Z = f * B / d. Disparities under MIN_DISPARITY_PX become NaN."""
    d = dmap.values
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(d >= MIN_DISPARITY_PX, focal_px * baseline_m / d, np.nan)
    return DepthMap(
        values=z.astype(np.float32),
        focal_px=float(focal_px),
        baseline_m=float(baseline_m),
    )


def rectify_image(img, remap):
    """Bilinear resampling of one image through an (h, w, 2) source map.

    Destinations whose source is NaN or outside the frame come out black.
    Accepts an ImageBuffer or array and returns the same kind.
    """
    buf = isinstance(img, ImageBuffer)
    px = img.pixels if buf else np.asarray(img)
    color = px.ndim == 3
    src = px.astype(np.float32)
    h, w = px.shape[:2]

    u = remap[..., 0]
    v = remap[..., 1]
    ok = np.isfinite(u) & np.isfinite(v)
    ok &= (u >= 0) & (u <= w - 1) & (v >= 0) & (v <= h - 1)
    uc = np.where(ok, u, 0.0)
    vc = np.where(ok, v, 0.0)

    x0 = np.minimum(uc.astype(np.int64), w - 2)
    y0 = np.minimum(vc.astype(np.int64), h - 2)
    fx = (uc - x0).astype(np.float32)
    fy = (vc - y0).astype(np.float32)
    if color:
        fx = fx[..., None]
        fy = fy[..., None]
    top = src[y0, x0] * (1 - fx) + src[y0, x0 + 1] * fx
    bot = src[y0 + 1, x0] * (1 - fx) + src[y0 + 1, x0 + 1] * fx
    out = top * (1 - fy) + bot * fy
    out[~ok] = 0.0
    out = np.clip(np.rint(out), 0, 255).astype(np.uint8)
    return ImageBuffer(out) if buf else out


def colorize_jet(values, vmin=None, vmax=None):
    """Jet false-color for a scalar field; NaN renders black.

    A constant field sits at mid-scale instead of dividing by zero.
    """
    v = np.asarray(values, dtype=float)
    finite = np.isfinite(v)
    if vmin is None:
        vmin = float(v[finite].min()) if finite.any() else 0.0
    if vmax is None:
        vmax = float(v[finite].max()) if finite.any() else 1.0
    span = vmax - vmin
    if span < 1e-12:
        x = np.full(v.shape, 0.5)
    else:
        x = np.clip((v - vmin) / span, 0.0, 1.0)
    x = np.where(finite, x, 0.0)  # NaN would poison the uint8 cast
    out = np.zeros(v.shape + (3,), dtype=np.uint8)
    for ch, s in enumerate((3.0, 2.0, 1.0)):
        out[..., ch] = np.rint(
            np.clip(1.5 - np.abs(4.0 * x - s), 0.0, 1.0) * 255.0
        ).astype(np.uint8)
    out[~finite] = 0
    return out


def region_distance(depth: DepthMap, bbox):
    """Median depth inside a (x0, y0, x1, y1) pixel box, NaN if no valid
    depth falls inside."""
    h, w = depth.values.shape
    x0 = max(int(np.floor(bbox[0])), 0)
    y0 = max(int(np.floor(bbox[1])), 0)
    x1 = min(int(np.ceil(bbox[2])), w)
    y1 = min(int(np.ceil(bbox[3])), h)
    if x1 <= x0 or y1 <= y0:
        return float("nan")
    patch = depth.values[y0:y1, x0:x1]
    valid = patch[np.isfinite(patch)]
    if valid.size == 0:
        return float("nan")
    return float(np.median(valid))
