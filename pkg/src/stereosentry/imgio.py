"""Image file I/O: binary PGM/PPM, quantized disparity maps, JPEG.

Netpbm readers and writers are hand-rolled (they are a page of code and the
disparity format needs the rarely-supported two-byte maxval=256 variant).
JPEG goes through Pillow; only encode quality is exposed.
"""

import io
import json
import re

import numpy as np
from PIL import Image

DISPARITY_INVALID = 0  # reserved sample value in disparity PGMs


def _read_netpbm_header(f, magic):
    if f.read(2) != magic:
        raise ValueError(f"not a {magic.decode()} file")
    fields = []
    while len(fields) < 3:
        line = f.readline()
        if not line:
            raise ValueError("truncated netpbm header")
        line = line.split(b"#", 1)[0]
        fields.extend(int(tok) for tok in re.findall(rb"\d+", line))
    width, height, maxval = fields[:3]
    return width, height, maxval


def write_pgm(pixels, path, maxval=255):
    """Binary (P5) grayscale. maxval > 255 switches to big-endian two-byte
    samples as the format prescribes."""
    px = np.asarray(pixels)
    if px.ndim != 2:
        raise ValueError("PGM wants a 2-d array")
    h, w = px.shape
    dtype = ">u2" if maxval > 255 else np.uint8
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n%d\n" % (w, h, maxval))
        f.write(np.ascontiguousarray(px.astype(dtype)).tobytes())


def read_pgm(path):
    """Returns (pixels, maxval); dtype uint8 or uint16 by maxval."""
    with open(path, "rb") as f:
        w, h, maxval = _read_netpbm_header(f, b"P5")
        dtype = ">u2" if maxval > 255 else np.uint8
        data = np.frombuffer(f.read(), dtype=dtype, count=w * h)
    return data.reshape(h, w).astype(np.uint16 if maxval > 255 else np.uint8), maxval


def write_ppm(pixels, path):
    """Binary (P6) RGB, 8 bits per channel."""
    px = np.asarray(pixels, dtype=np.uint8)
    if px.ndim != 3 or px.shape[2] != 3:
        raise ValueError("PPM wants an (h, w, 3) array")
    h, w = px.shape[:2]
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (w, h))
        f.write(np.ascontiguousarray(px).tobytes())


def read_ppm(path):
    with open(path, "rb") as f:
        w, h, maxval = _read_netpbm_header(f, b"P6")
        if maxval != 255:
            raise ValueError("only 8-bit PPM supported")
        data = np.frombuffer(f.read(), dtype=np.uint8, count=w * h * 3)
    return data.reshape(h, w, 3).copy()


def encode_jpeg(rgb, quality=80):
    """RGB (h, w, 3) uint8 to JPEG bytes."""
    buf = io.BytesIO()
    Image.fromarray(np.asarray(rgb, dtype=np.uint8), "RGB").save(
        buf, "JPEG", quality=int(quality)
    )
    return buf.getvalue()


def decode_jpeg(data):
    return np.asarray(Image.open(io.BytesIO(data)).convert("RGB"))


def save_disparity(disp, path, max_d, block):
    """Quantize a float disparity map into a maxval-256 PGM plus a JSON
    sidecar (same path with .json appended).

    Valid disparities map to clamp(round(d * 256 / max_d), 1, 256); sample
    0 is reserved for invalid pixels (NaN input).
    """
    d = np.asarray(disp, dtype=float)
    valid = np.isfinite(d)
    q = np.zeros(d.shape, dtype=np.uint16)
    scaled = np.rint(d[valid] * 256.0 / max_d)
    q[valid] = np.clip(scaled, 1, 256).astype(np.uint16)
    write_pgm(q, path, maxval=256)
    meta = {
        "min_d": float(np.min(d[valid])) if valid.any() else None,
        "max_d": float(max_d),
        "block": int(block),
        "invalid_fraction": float(1.0 - valid.mean()),
    }
    with open(f"{path}.json", "w") as f:
        json.dump(meta, f)
        f.write("\n")
    return meta


def load_disparity(path):
    """Inverse of save_disparity: (float disparity with NaN invalid, meta)."""
    q, maxval = read_pgm(path)
    if maxval != 256:
        raise ValueError("disparity PGM must have maxval 256")
    with open(f"{path}.json") as f:
        meta = json.load(f)
    d = q.astype(float) * (meta["max_d"] / 256.0)
    d[q == DISPARITY_INVALID] = np.nan
    return d, meta
