"""Image and embedding similarity metrics.

Pixel metrics (MSE, PSNR, SSIM) operate on 8-bit images; unequal sizes
are resized to the elementwise-smaller dimensions first (area filter when
shrinking, bilinear when growing), channel mismatches collapse both
sides to grayscale.  Set-level FID fits Gaussians to two embedding sets
and computes the Fréchet distance with an eigendecomposition-based
matrix square root.  CSR aggregates render results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import cv2
import numpy as np

from .errors import (
    EmptyBatch,
    NonFiniteInput,
    ShapeMismatch,
    TooFewSamples,
    ZeroVector,
)
from .images import RasterImage

PSNR_INF = math.inf
PSNR_CAP_DB = 100.0  # finite stand-in when averaging over a dataset

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = (0.01 * 255) ** 2
SSIM_C2 = (0.03 * 255) ** 2


@dataclass(frozen=True)
class ScoreReport:
    mse: float | None = None
    ssim: float | None = None
    psnr: float | None = None
    cosine: float | None = None
    fid: float | None = None
    csr: float | None = None

    def to_dict(self) -> dict:
        out = {}
        for key in ("mse", "ssim", "psnr", "cosine", "fid", "csr"):
            value = getattr(self, key)
            if value is None:
                continue
            out[key] = "inf" if value == PSNR_INF else value
        return out


def _as_float(image) -> np.ndarray:
    if isinstance(image, RasterImage):
        return image.to_array().astype(np.float64)
    return np.asarray(image, dtype=np.float64)


def _common_pair(a, b, resize: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Bring two images to a shared shape for pixelwise comparison."""
    xa, xb = _as_float(a), _as_float(b)
    if (xa.ndim == 3) != (xb.ndim == 3):
        xa, xb = _to_gray(xa), _to_gray(xb)
    if xa.shape != xb.shape:
        if not resize:
            raise ShapeMismatch(f"{xa.shape} vs {xb.shape}")
        th = min(xa.shape[0], xb.shape[0])
        tw = min(xa.shape[1], xb.shape[1])
        xa, xb = _resize(xa, tw, th), _resize(xb, tw, th)
    return xa, xb


def _to_gray(x: np.ndarray) -> np.ndarray:
    if x.ndim == 2:
        return x
    return (299 * x[:, :, 0] + 587 * x[:, :, 1] + 114 * x[:, :, 2]) / 1000.0


def _resize(x: np.ndarray, w: int, h: int) -> np.ndarray:
    if x.shape[1] == w and x.shape[0] == h:
        return x
    shrinking = w * h <= x.shape[0] * x.shape[1]
    interp = cv2.INTER_AREA if shrinking else cv2.INTER_LINEAR
    return cv2.resize(x, (w, h), interpolation=interp)


def mse(a, b, resize: bool = True) -> float:
    """Mean squared pixel error."""
    xa, xb = _common_pair(a, b, resize)
    return float(np.mean((xa - xb) ** 2))


def psnr(a, b, resize: bool = True) -> float:
    """Peak signal-to-noise ratio in dB; +inf for identical inputs."""
    err = mse(a, b, resize)
    if err == 0:
        return PSNR_INF
    return 10.0 * math.log10(255.0**2 / err)


def psnr_for_average(value: float, cap_db: float = PSNR_CAP_DB) -> float:
    """Replace the +inf marker with a finite cap for dataset averaging."""
    return min(value, cap_db)


def _gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    half = (size - 1) / 2.0
    xs = np.arange(size) - half
    g = np.exp(-(xs**2) / (2 * sigma**2))
    kernel = np.outer(g, g)
    return kernel / kernel.sum()


def ssim(a, b, resize: bool = True) -> float:
    """Mean structural similarity over Gaussian-weighted sliding windows."""
    xa, xb = _common_pair(a, b, resize)
    xa, xb = _to_gray(xa), _to_gray(xb)
    win = min(SSIM_WINDOW, xa.shape[0], xa.shape[1])
    if win % 2 == 0:
        win -= 1
    win = max(win, 1)
    kernel = _gaussian_kernel(win, SSIM_SIGMA)

    def filt(x):
        return cv2.filter2D(x, -1, kernel, borderType=cv2.BORDER_REFLECT)

    pad = win // 2

    def valid(x):
        return x[pad : x.shape[0] - pad or None, pad : x.shape[1] - pad or None]

    mu_a = filt(xa)
    mu_b = filt(xb)
    sigma_a = filt(xa * xa) - mu_a * mu_a
    sigma_b = filt(xb * xb) - mu_b * mu_b
    sigma_ab = filt(xa * xb) - mu_a * mu_b
    num = (2 * mu_a * mu_b + SSIM_C1) * (2 * sigma_ab + SSIM_C2)
    den = (mu_a**2 + mu_b**2 + SSIM_C1) * (sigma_a + sigma_b + SSIM_C2)
    ssim_map = num / den
    value = float(np.mean(valid(ssim_map)))
    return max(-1.0, min(1.0, value))


def cosine(e1, e2) -> float:
    """Cosine similarity between two embeddings."""
    v1 = np.asarray(e1, dtype=np.float64).reshape(-1)
    v2 = np.asarray(e2, dtype=np.float64).reshape(-1)
    if v1.shape != v2.shape:
        raise ShapeMismatch(f"embedding dims {v1.shape} vs {v2.shape}")
    n1 = np.linalg.norm(v1)
    n2 = np.linalg.norm(v2)
    if n1 < 1e-12 or n2 < 1e-12:
        raise ZeroVector("cannot compare zero-norm embeddings")
    value = float(np.dot(v1, v2) / (n1 * n2))
    return max(-1.0, min(1.0, value))


def frechet_distance(
    mu_a: np.ndarray, cov_a: np.ndarray, mu_b: np.ndarray, cov_b: np.ndarray
) -> float:
    """Fréchet distance between two Gaussians from their moments.

    Tr(sqrt(cov_a cov_b)) is computed as the eigenvalue sum of the
    symmetrized product sqrt(cov_a) cov_b sqrt(cov_a); tiny negative
    eigenvalues from roundoff are clamped to zero, as is the result.
    """
    mu_a = np.atleast_1d(np.asarray(mu_a, dtype=np.float64))
    mu_b = np.atleast_1d(np.asarray(mu_b, dtype=np.float64))
    cov_a = np.atleast_2d(np.asarray(cov_a, dtype=np.float64))
    cov_b = np.atleast_2d(np.asarray(cov_b, dtype=np.float64))

    diff = float(np.sum((mu_a - mu_b) ** 2))

    vals_a, vecs_a = np.linalg.eigh(cov_a)
    vals_a = np.clip(vals_a, 0.0, None)
    sqrt_a = (vecs_a * np.sqrt(vals_a)) @ vecs_a.T
    inner = sqrt_a @ cov_b @ sqrt_a
    vals = np.linalg.eigvalsh((inner + inner.T) / 2.0)
    vals = np.clip(vals, 0.0, None)
    trace_sqrt = float(np.sum(np.sqrt(vals)))

    value = diff + float(np.trace(cov_a)) + float(np.trace(cov_b)) - 2.0 * trace_sqrt
    return max(0.0, value)


def fid(set_a, set_b) -> float:
    """FID between two embedding sets (unbiased covariance, n-1)."""
    xa = np.asarray([np.asarray(e, dtype=np.float64).reshape(-1) for e in set_a])
    xb = np.asarray([np.asarray(e, dtype=np.float64).reshape(-1) for e in set_b])
    if xa.ndim != 2 or xb.ndim != 2 or xa.shape[1] != xb.shape[1]:
        raise ShapeMismatch("embedding sets must share one dimensionality")
    if len(xa) < 2 or len(xb) < 2:
        raise TooFewSamples("need at least 2 embeddings per set")
    if not (np.isfinite(xa).all() and np.isfinite(xb).all()):
        raise NonFiniteInput("embeddings contain NaN or infinity")
    mu_a, mu_b = xa.mean(axis=0), xb.mean(axis=0)
    cov_a = np.cov(xa, rowvar=False, ddof=1)
    cov_b = np.cov(xb, rowvar=False, ddof=1)
    return frechet_distance(mu_a, cov_a, mu_b, cov_b)


def csr(results) -> float:
    """Fraction of render results that compiled to a non-blank image."""
    results = list(results)
    if not results:
        raise EmptyBatch("CSR over an empty batch is undefined")
    good = sum(1 for r in results if _status_value(r) == "compiled_nonblank")
    return good / len(results)


def _status_value(result) -> str:
    status = getattr(result, "status", result)
    return getattr(status, "value", status)


def pair_report(a, b, embedder=None) -> ScoreReport:
    """MSE/SSIM/PSNR for an image pair, plus cosine when an embedder is given."""
    cos = None
    if embedder is not None:
        cos = cosine(embedder.embed(a), embedder.embed(b))
    return ScoreReport(mse=mse(a, b), ssim=ssim(a, b), psnr=psnr(a, b), cosine=cos)
