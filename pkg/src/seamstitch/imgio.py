"""Image file handling: 8-bit PNG/JPEG in and out, plus PFM debug dumps."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .errors import StitchError


class IoError(StitchError):
    pass


def load_image(path) -> np.ndarray:
    """Load an 8-bit image as (H,W,3) uint8 RGB (grayscale is replicated)."""
    try:
        with Image.open(path) as im:
            if im.mode not in ("RGB", "L"):
                im = im.convert("RGB")
            arr = np.asarray(im, dtype=np.uint8)
    except FileNotFoundError as exc:
        raise IoError(f"cannot read image: {path}") from exc
    except OSError as exc:
        raise IoError(f"cannot decode image: {path}") from exc
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    return arr


def save_png(path, img: np.ndarray) -> None:
    arr = np.asarray(img)
    if arr.dtype != np.uint8:
        arr = np.clip(np.round(arr), 0, 255).astype(np.uint8)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    mode = {2: "L", 3: "RGB"}.get(arr.ndim if arr.ndim == 2 else arr.shape[2])
    if arr.ndim == 3 and arr.shape[2] == 4:
        mode = "RGBA"
    Image.fromarray(arr, mode=mode).save(path)


def to_gray(img: np.ndarray) -> np.ndarray:
    """Rec.601 luma as float64 in [0, 255]."""
    if img.ndim == 2:
        return img.astype(np.float64)
    r = img[:, :, 0].astype(np.float64)
    g = img[:, :, 1].astype(np.float64)
    b = img[:, :, 2].astype(np.float64)
    return 0.299 * r + 0.587 * g + 0.114 * b


def save_pfm(path, field: np.ndarray) -> None:
    """Single-channel PFM, little-endian (scale -1.0), rows bottom-to-top."""
    if field.ndim != 2:
        raise ValueError("PFM dump expects a single-channel field")
    data = np.flipud(field.astype(np.float32))
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(b"Pf\n")
        fh.write(f"{field.shape[1]} {field.shape[0]}\n".encode("ascii"))
        fh.write(b"-1.0\n")
        fh.write(data.tobytes())


def load_pfm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.readline().strip()
        if header != b"Pf":
            raise IoError(f"not a single-channel PFM: {path}")
        w, h = (int(v) for v in fh.readline().split())
        scale = float(fh.readline())
        data = np.frombuffer(fh.read(w * h * 4), dtype="<f4" if scale < 0 else ">f4")
    return np.flipud(data.reshape(h, w)).astype(np.float32)
