"""Image primitives: loading, resizing, color conversion, pooling.

Conventions used throughout the toolkit:

* an RGB image is a float64 array of shape (height, width, 3) with values
  in [0, 255];
* a gray image is a float64 array of shape (height, width), same range;
* an HSV image is a float64 array of shape (height, width, 3) with hue in
  degrees [0, 360), saturation and value in [0, 1].

Supported input formats are 8-bit PNG (RGB or RGBA, alpha dropped) and
binary PPM (P6, maxval 255). Anything else is rejected so decoding stays
auditable.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DataError

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def load_image(path: str) -> np.ndarray:
    """Load a PNG or PPM (P6) file as an RGB image.

    The format is detected from the file's magic bytes, not its extension.
    Raises DataError, naming the path, for unsupported or corrupt files.
    """
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read image {path!r}: {exc}") from exc
    if raw.startswith(_PNG_SIGNATURE):
        return _decode_png(raw, path)
    if raw.startswith(b"P6"):
        return _decode_ppm(raw, path)
    raise DataError(f"unsupported image format in {path!r} (expected PNG or PPM P6)")


def _decode_png(raw: bytes, path: str) -> np.ndarray:
    try:
        img = Image.open(io.BytesIO(raw))
        img.load()
    except (UnidentifiedImageError, OSError) as exc:
        raise DataError(f"corrupt PNG file {path!r}: {exc}") from exc
    if img.mode not in ("RGB", "RGBA"):
        raise DataError(f"unsupported PNG mode {img.mode!r} in {path!r} (expected 8-bit RGB or RGBA)")
    arr = np.asarray(img, dtype=np.float64)
    return np.ascontiguousarray(arr[:, :, :3])


def _decode_ppm(raw: bytes, path: str) -> np.ndarray:
    # Header is "P6", then width, height, maxval as ASCII tokens separated
    # by whitespace; '#' starts a comment running to end of line. A single
    # whitespace byte separates the maxval from the binary pixel payload.
    pos = 2
    fields: list[int] = []
    while len(fields) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        token = raw[start:pos]
        if not token.isdigit():
            raise DataError(f"corrupt PPM header in {path!r}")
        fields.append(int(token))
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    if maxval != 255:
        raise DataError(f"unsupported PPM maxval {maxval} in {path!r} (expected 255)")
    expected = width * height * 3
    payload = raw[pos : pos + expected]
    if len(payload) != expected:
        raise DataError(f"truncated PPM payload in {path!r}")
    arr = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    return arr.astype(np.float64)


def write_ppm(path: str, img: np.ndarray) -> None:
    """Write an RGB image as binary PPM (P6), rounding to 8-bit."""
    data = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    h, w = data.shape[:2]
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (w, h))
        fh.write(data.tobytes())


def write_png(path: str, img: np.ndarray) -> None:
    """Write an RGB image as 8-bit PNG."""
    data = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    Image.fromarray(data, mode="RGB").save(path, format="PNG")


def resize_bilinear(img: np.ndarray, height: int, width: int) -> np.ndarray:
    """Resize an RGB or gray image with bilinear interpolation.

    Output pixel centers are aligned with input pixel centers (source
    coordinate (i + 0.5) * scale - 0.5), edges replicated. Output dimensions
    are exactly (height, width); values are clamped to [0, 255].
    """
    if height < 1 or width < 1:
        raise ValueError("target dimensions must be at least 1x1")
    src_h, src_w = img.shape[:2]
    out = img.astype(np.float64, copy=False)
    out = _interp_axis(out, src_h, height, axis=0)
    out = _interp_axis(out, src_w, width, axis=1)
    return np.clip(out, 0.0, 255.0)


def _interp_axis(img: np.ndarray, src: int, dst: int, axis: int) -> np.ndarray:
    coords = (np.arange(dst) + 0.5) * (src / dst) - 0.5
    lo = np.floor(coords)
    frac = coords - lo
    i0 = np.clip(lo, 0, src - 1).astype(np.intp)
    i1 = np.clip(lo + 1, 0, src - 1).astype(np.intp)
    a = np.take(img, i0, axis=axis)
    b = np.take(img, i1, axis=axis)
    shape = [1] * img.ndim
    shape[axis] = dst
    f = frac.reshape(shape)
    return a * (1.0 - f) + b * f


def rgb_to_hsv(img: np.ndarray) -> np.ndarray:
    """Convert an RGB image to HSV (hexcone model).

    Hue is in degrees [0, 360), saturation and value in [0, 1]. Degenerate
    pixels are pinned: value 0 gives s = 0 and h = 0; max == min gives h = 0.
    """
    rgb = img.astype(np.float64, copy=False) / 255.0
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    cmax = rgb.max(axis=-1)
    cmin = rgb.min(axis=-1)
    delta = cmax - cmin

    # Guard divisions; chromatic masks overwrite the placeholder results.
    safe_delta = np.where(delta == 0.0, 1.0, delta)
    h = np.zeros_like(cmax)
    rmax = (cmax == r) & (delta > 0)
    gmax = (cmax == g) & (delta > 0) & ~rmax
    bmax = (delta > 0) & ~rmax & ~gmax
    h = np.where(rmax, (g - b) / safe_delta, h)
    h = np.where(gmax, 2.0 + (b - r) / safe_delta, h)
    h = np.where(bmax, 4.0 + (r - g) / safe_delta, h)
    h = (h * 60.0) % 360.0

    s = np.where(cmax == 0.0, 0.0, delta / np.where(cmax == 0.0, 1.0, cmax))
    return np.stack([h, s, cmax], axis=-1)


def hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    """Inverse of rgb_to_hsv, returning values in [0, 255]."""
    h = (hsv[..., 0] % 360.0) / 60.0
    s, v = hsv[..., 1], hsv[..., 2]
    i = np.floor(h).astype(np.intp) % 6
    f = h - np.floor(h)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    lut_r = np.stack([v, q, p, p, t, v], axis=-1)
    lut_g = np.stack([t, v, v, q, p, p], axis=-1)
    lut_b = np.stack([p, p, t, v, v, q], axis=-1)
    idx = i[..., None]
    r = np.take_along_axis(lut_r, idx, axis=-1)[..., 0]
    g = np.take_along_axis(lut_g, idx, axis=-1)[..., 0]
    b = np.take_along_axis(lut_b, idx, axis=-1)[..., 0]
    return np.stack([r, g, b], axis=-1) * 255.0


def average_pool_2x2(img: np.ndarray) -> np.ndarray:
    """Downsample by averaging non-overlapping 2x2 blocks.

    Output is (floor(h/2), floor(w/2)); a trailing odd row or column is
    dropped. Works on gray and multi-channel images.
    """
    h2, w2 = img.shape[0] // 2, img.shape[1] // 2
    if h2 < 1 or w2 < 1:
        raise ValueError("image too small for 2x2 pooling")
    trimmed = img[: 2 * h2, : 2 * w2]
    if img.ndim == 2:
        return trimmed.reshape(h2, 2, w2, 2).mean(axis=(1, 3))
    return trimmed.reshape(h2, 2, w2, 2, img.shape[2]).mean(axis=(1, 3))
