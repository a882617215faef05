"""Parameterized image augmentation for training-image diversification.

Eight stages applied in order: replication-border canvas expansion,
random perspective warp, content-aware crop back to the original size,
non-uniform illumination, optional Gaussian blur, contrast/saturation
reduction, radial lens distortion, small in-plane rotation.  Output
dimensions always equal input dimensions and every sample stays within
its configured interval.

Each geometric stage has an explicit-parameter function (warp offsets,
distortion coefficients, rotation angle, ...) so identity limits are
testable pixel-exactly; the seeded entry points sample parameters and
delegate.  An optional trace dict captures every sampled value.
"""

from __future__ import annotations

from dataclasses import dataclass

import cv2
import numpy as np

from .errors import ImageTooSmall
from .images import RasterImage


@dataclass(frozen=True)
class AugmentConfig:
    border_px: int = 100
    offset_range_px: tuple[float, float] = (-50.0, 50.0)
    close_kernel: int = 15
    crop_margin_px: int = 5
    min_crop_ratio: float = 0.5
    illum_base: tuple[float, float] = (0.6, 0.7)
    illum_range: tuple[float, float] = (0.2, 0.3)
    illum_dark_band: tuple[float, float] = (0.4, 0.6)
    illum_bright_band: tuple[float, float] = (0.8, 1.0)
    blur_prob: float = 0.5
    blur_radius: tuple[float, float] = (0.5, 1.2)
    contrast: tuple[float, float] = (0.7, 0.8)
    saturation: tuple[float, float] = (0.7, 0.85)
    k1: tuple[float, float] = (-0.03, 0.03)
    k2: tuple[float, float] = (-0.01, 0.01)
    rotation_deg: tuple[float, float] = (-1.5, 1.5)

    @classmethod
    def from_mapping(cls, data: dict) -> "AugmentConfig":
        kwargs = {}
        for name in cls.__dataclass_fields__:
            if name in data:
                value = data[name]
                kwargs[name] = tuple(value) if isinstance(value, list) else value
        return cls(**kwargs)


DEFAULT_CONFIG = AugmentConfig()


def _to_bgr(image: RasterImage) -> np.ndarray:
    arr = image.to_array()
    if image.channels == 1:
        arr = cv2.cvtColor(arr, cv2.COLOR_GRAY2BGR)
    return arr


def _sample(rng: np.random.Generator, interval: tuple[float, float], trace, key: str) -> float:
    value = float(rng.uniform(interval[0], interval[1]))
    if trace is not None:
        trace.setdefault(key, []).append(value)
    return value


# --- stages 1-2: canvas expansion and perspective warp ------------------------


def expand_canvas(arr: np.ndarray, border_px: int) -> np.ndarray:
    return cv2.copyMakeBorder(
        arr, border_px, border_px, border_px, border_px, cv2.BORDER_REPLICATE
    )


def warp_with_offsets(arr: np.ndarray, border_px: int, offsets: np.ndarray) -> np.ndarray:
    """Perspective warp mapping the original corners to offset targets."""
    h, w = arr.shape[:2]
    ow = w - 2 * border_px
    oh = h - 2 * border_px
    b = float(border_px)
    src = np.array(
        [[b, b], [b + ow, b], [b + ow, b + oh], [b, b + oh]], dtype=np.float32
    )
    dst = src + offsets.astype(np.float32)
    matrix = cv2.getPerspectiveTransform(src, dst)
    return cv2.warpPerspective(
        arr, matrix, (w, h), flags=cv2.INTER_LINEAR, borderMode=cv2.BORDER_REPLICATE
    )


def expand_and_warp(
    image_or_array,
    rng: np.random.Generator,
    config: AugmentConfig = DEFAULT_CONFIG,
    trace: dict | None = None,
) -> np.ndarray:
    arr = image_or_array if isinstance(image_or_array, np.ndarray) else _to_bgr(image_or_array)
    if min(arr.shape[:2]) < 8:
        raise ImageTooSmall(f"minimum side is 8px, got {arr.shape[:2]}")
    canvas = expand_canvas(arr, config.border_px)
    offsets = np.array(
        [
            [
                _sample(rng, config.offset_range_px, trace, "offset"),
                _sample(rng, config.offset_range_px, trace, "offset"),
            ]
            for _ in range(4)
        ]
    )
    return warp_with_offsets(canvas, config.border_px, offsets)


# --- stage 3: content crop and resize -----------------------------------------


def crop_and_resize(
    arr: np.ndarray,
    original_size: tuple[int, int],
    config: AugmentConfig = DEFAULT_CONFIG,
) -> np.ndarray:
    """Crop to the closed foreground contour and resize to the original size.

    Falls back to a center crop when no foreground is found.  The crop is
    constrained to at least ``min_crop_ratio`` of the original size on
    each axis.
    """
    ow, oh = original_size
    h, w = arr.shape[:2]
    gray = cv2.cvtColor(arr, cv2.COLOR_BGR2GRAY)
    _, binary = cv2.threshold(gray, 0, 255, cv2.THRESH_BINARY_INV + cv2.THRESH_OTSU)
    kernel = np.ones((config.close_kernel, config.close_kernel), np.uint8)
    closed = cv2.morphologyEx(binary, cv2.MORPH_CLOSE, kernel)
    contours, _ = cv2.findContours(closed, cv2.RETR_EXTERNAL, cv2.CHAIN_APPROX_SIMPLE)

    if contours:
        largest = max(contours, key=cv2.contourArea)
        x, y, bw, bh = cv2.boundingRect(largest)
        x0 = max(0, x - config.crop_margin_px)
        y0 = max(0, y - config.crop_margin_px)
        x1 = min(w, x + bw + config.crop_margin_px)
        y1 = min(h, y + bh + config.crop_margin_px)
    else:
        # blank warp result: center crop of the original size
        x0 = max(0, (w - ow) // 2)
        y0 = max(0, (h - oh) // 2)
        x1 = min(w, x0 + ow)
        y1 = min(h, y0 + oh)

    min_w = int(ow * config.min_crop_ratio)
    min_h = int(oh * config.min_crop_ratio)
    x0, x1 = _grow_to(x0, x1, min_w, w)
    y0, y1 = _grow_to(y0, y1, min_h, h)

    crop = arr[y0:y1, x0:x1]
    shrink = crop.shape[1] * crop.shape[0] >= ow * oh
    interp = cv2.INTER_AREA if shrink else cv2.INTER_LINEAR
    return cv2.resize(crop, (ow, oh), interpolation=interp)


def _grow_to(a: int, b: int, minimum: int, limit: int) -> tuple[int, int]:
    if b - a >= minimum:
        return a, b
    extra = minimum - (b - a)
    a = max(0, a - extra // 2)
    b = min(limit, a + minimum)
    a = max(0, b - minimum)
    return a, b


# --- stage 4: illumination gradient -------------------------------------------


def illumination_matrix(
    shape: tuple[int, int],
    direction: str,
    start: float,
    end: float,
) -> np.ndarray:
    """Per-pixel brightness factors for one gradient direction.

    For ``central``, ``start`` is the base brightness and ``end`` the
    additional range at the center (factor = base + range at distance 0,
    decaying to base at the farthest corner).
    """
    h, w = shape
    if direction == "horizontal":
        row = np.linspace(start, end, w, dtype=np.float64)
        return np.tile(row, (h, 1))
    if direction == "vertical":
        col = np.linspace(start, end, h, dtype=np.float64)
        return np.tile(col[:, None], (1, w))
    if direction == "central":
        cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
        yy, xx = np.mgrid[0:h, 0:w]
        dist = np.sqrt((yy - cy) ** 2 + (xx - cx) ** 2)
        max_dist = float(np.sqrt(cy**2 + cx**2)) or 1.0
        return start + end * (1.0 - dist / max_dist)
    raise ValueError(f"unknown gradient direction {direction!r}")


def apply_illumination(
    arr: np.ndarray,
    rng: np.random.Generator,
    config: AugmentConfig = DEFAULT_CONFIG,
    trace: dict | None = None,
) -> np.ndarray:
    direction = ("horizontal", "vertical", "central")[int(rng.integers(0, 3))]
    if trace is not None:
        trace.setdefault("illum_direction", []).append(direction)
    if direction == "central":
        base = _sample(rng, config.illum_base, trace, "illum_base")
        rng_amt = _sample(rng, config.illum_range, trace, "illum_range")
        gradient = illumination_matrix(arr.shape[:2], direction, base, rng_amt)
    else:
        dark = _sample(rng, config.illum_dark_band, trace, "illum_dark")
        bright = _sample(rng, config.illum_bright_band, trace, "illum_bright")
        gradient = illumination_matrix(arr.shape[:2], direction, dark, bright)
    out = arr.astype(np.float64) * gradient[:, :, None]
    return np.clip(out, 0, 255).astype(np.uint8)


# --- stages 5-6: blur and color adjustment -------------------------------------


def gaussian_blur(arr: np.ndarray, radius: float) -> np.ndarray:
    return cv2.GaussianBlur(arr, (0, 0), sigmaX=radius, sigmaY=radius)


def adjust_colors(arr: np.ndarray, contrast_factor: float, saturation_factor: float) -> np.ndarray:
    """Scale deviation from the gray mean (contrast) and from gray (saturation)."""
    out = arr.astype(np.float64)
    gray = cv2.cvtColor(arr, cv2.COLOR_BGR2GRAY).astype(np.float64)
    out = gray.mean() + contrast_factor * (out - gray.mean())
    gray3 = cv2.cvtColor(np.clip(out, 0, 255).astype(np.uint8), cv2.COLOR_BGR2GRAY)
    gray3 = gray3.astype(np.float64)[:, :, None]
    out = gray3 + saturation_factor * (out - gray3)
    return np.clip(out, 0, 255).astype(np.uint8)


def apply_photometric(
    arr: np.ndarray,
    rng: np.random.Generator,
    config: AugmentConfig = DEFAULT_CONFIG,
    trace: dict | None = None,
) -> np.ndarray:
    coin = float(rng.uniform(0.0, 1.0))
    if coin < config.blur_prob:
        radius = _sample(rng, config.blur_radius, trace, "blur_radius")
        arr = gaussian_blur(arr, radius)
    elif trace is not None:
        trace.setdefault("blur_skipped", []).append(1.0)
    contrast = _sample(rng, config.contrast, trace, "contrast")
    saturation = _sample(rng, config.saturation, trace, "saturation")
    return adjust_colors(arr, contrast, saturation)


# --- stages 7-8: lens distortion and rotation -----------------------------------


def radial_distort(arr: np.ndarray, k1: float, k2: float) -> np.ndarray:
    """Remap with x' = x_norm(1 + k1 r + k2 r^2), r = x_norm^2 + y_norm^2."""
    h, w = arr.shape[:2]
    cx = (w - 1) / 2.0
    cy = (h - 1) / 2.0
    xx, yy = np.meshgrid(np.arange(w, dtype=np.float32), np.arange(h, dtype=np.float32))
    xn = (xx - cx) / cx
    yn = (yy - cy) / cy
    r = xn * xn + yn * yn  # squared radius by definition
    factor = 1.0 + k1 * r + k2 * r * r
    map_x = (xn * factor * cx + cx).astype(np.float32)
    map_y = (yn * factor * cy + cy).astype(np.float32)
    return cv2.remap(
        arr, map_x, map_y, interpolation=cv2.INTER_LINEAR, borderMode=cv2.BORDER_REPLICATE
    )


def rotate(arr: np.ndarray, angle_deg: float) -> np.ndarray:
    h, w = arr.shape[:2]
    center = ((w - 1) / 2.0, (h - 1) / 2.0)
    matrix = cv2.getRotationMatrix2D(center, angle_deg, 1.0)
    return cv2.warpAffine(
        arr, matrix, (w, h), flags=cv2.INTER_LINEAR, borderMode=cv2.BORDER_REPLICATE
    )


def apply_distortion_and_rotation(
    arr: np.ndarray,
    rng: np.random.Generator,
    config: AugmentConfig = DEFAULT_CONFIG,
    trace: dict | None = None,
) -> np.ndarray:
    k1 = _sample(rng, config.k1, trace, "k1")
    k2 = _sample(rng, config.k2, trace, "k2")
    arr = radial_distort(arr, k1, k2)
    angle = _sample(rng, config.rotation_deg, trace, "rotation_deg")
    return rotate(arr, angle)


# --- composite -----------------------------------------------------------------


def augment(
    image: RasterImage,
    seed: int,
    config: AugmentConfig = DEFAULT_CONFIG,
    trace: dict | None = None,
) -> RasterImage:
    """Full eight-stage augmentation; deterministic for a given seed."""
    rng = np.random.default_rng(seed)
    arr = _to_bgr(image)
    original_size = (arr.shape[1], arr.shape[0])
    arr = expand_and_warp(arr, rng, config, trace)
    arr = crop_and_resize(arr, original_size, config)
    arr = apply_illumination(arr, rng, config, trace)
    arr = apply_photometric(arr, rng, config, trace)
    arr = apply_distortion_and_rotation(arr, rng, config, trace)
    return RasterImage.from_array(arr)
