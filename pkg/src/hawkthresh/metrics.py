"""Full-reference quality metrics between an original and a segmented image.

All metrics take two :class:`~hawkthresh.imagery.GrayImage` objects of the
same shape (8-bit, data range 255) and are symmetric in their arguments.

* ``psnr``: peak 255; identical images give ``math.inf``.
* ``ssim``: 11x11 Gaussian window (sigma 1.5), ``K1 = 0.01``, ``K2 = 0.03``,
  averaged over the valid region.
* ``fsim``: phase congruency from a 4-scale, 4-orientation log-Gabor bank,
  Scharr gradients, ``T1 = 0.85``, ``T2 = 160`` (grayscale FSIM).
* ``hpsi``: Haar wavelet perceptual similarity, ``C = 30``, ``alpha = 4.2``.
* ``qilv``: three-factor comparison of 11x11 Gaussian local-variance maps.
* ``uiqi``: one global window by default; ``windowed=True`` averages 8x8
  sliding windows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage, signal

from .imagery import GrayImage

PEAK = 255.0
EPS = 1e-12

SSIM_SIGMA = 1.5
SSIM_RADIUS = 5  # 11x11 window
SSIM_K1, SSIM_K2 = 0.01, 0.03

FSIM_T1, FSIM_T2 = 0.85, 160.0
HPSI_C, HPSI_ALPHA = 30.0, 4.2

METRIC_NAMES = ("psnr", "ssim", "fsim", "uiqi", "qilv", "hpsi")


def _pair(a: GrayImage, b: GrayImage) -> tuple[np.ndarray, np.ndarray]:
    x = a.pixels if isinstance(a, GrayImage) else np.asarray(a)
    y = b.pixels if isinstance(b, GrayImage) else np.asarray(b)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return x.astype(np.float64), y.astype(np.float64)


def psnr(a: GrayImage, b: GrayImage) -> float:
    x, y = _pair(a, b)
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK**2 / mse)


def _gaussian_valid(img: np.ndarray) -> np.ndarray:
    r = SSIM_RADIUS
    out = ndimage.gaussian_filter(img, SSIM_SIGMA, truncate=r / SSIM_SIGMA, mode="reflect")
    return out[r:-r, r:-r]


def _check_window(x: np.ndarray, size: int) -> None:
    if min(x.shape) < size:
        raise ValueError(f"image {x.shape} smaller than the {size}x{size} window")


def ssim(a: GrayImage, b: GrayImage) -> float:
    x, y = _pair(a, b)
    _check_window(x, 2 * SSIM_RADIUS + 1)
    c1 = (SSIM_K1 * PEAK) ** 2
    c2 = (SSIM_K2 * PEAK) ** 2
    mx, my = _gaussian_valid(x), _gaussian_valid(y)
    vx = _gaussian_valid(x * x) - mx * mx
    vy = _gaussian_valid(y * y) - my * my
    cxy = _gaussian_valid(x * y) - mx * my
    num = (2 * mx * my + c1) * (2 * cxy + c2)
    den = (mx * mx + my * my + c1) * (vx + vy + c2)
    return float(np.mean(num / den))


def uiqi(a: GrayImage, b: GrayImage, windowed: bool = False) -> float:
    """Universal image quality index.

    ``4 s_xy m_x m_y / ((s_x^2 + s_y^2)(m_x^2 + m_y^2))`` over the whole
    image, with ``1e-12`` added to both denominator factors. Identical
    images give exactly 1.
    """
    if windowed:
        return uiqi_windowed(a, b)
    x, y = _pair(a, b)
    if np.array_equal(x, y):
        return 1.0
    mx, my = x.mean(), y.mean()
    dx, dy = x - mx, y - my
    vx, vy = np.mean(dx * dx), np.mean(dy * dy)
    cxy = np.mean(dx * dy)
    return float(4.0 * cxy * mx * my / ((vx + vy + EPS) * (mx * mx + my * my + EPS)))


def _box_sums(img: np.ndarray, k: int) -> np.ndarray:
    s = np.pad(img, ((1, 0), (1, 0))).cumsum(0).cumsum(1)
    return s[k:, k:] - s[:-k, k:] - s[k:, :-k] + s[:-k, :-k]


def uiqi_windowed(a: GrayImage, b: GrayImage, block: int = 8) -> float:
    """Mean UIQI over all ``block x block`` sliding windows.

    Flat windows follow the usual conventions: both flat and equal mean
    luminance only; both flat with zero luminance gives 1.
    """
    x, y = _pair(a, b)
    _check_window(x, block)
    n = block * block
    sx, sy = _box_sums(x, block), _box_sums(y, block)
    sxx, syy, sxy = _box_sums(x * x, block), _box_sums(y * y, block), _box_sums(x * y, block)
    prod = sx * sy
    num = 4.0 * (n * sxy - prod) * prod
    den1 = n * (sxx + syy) - sx * sx - sy * sy
    den2 = sx * sx + sy * sy
    den = den1 * den2
    q = np.ones_like(den)
    lum_only = (den1 == 0) & (den2 != 0)
    q[lum_only] = 2.0 * prod[lum_only] / den2[lum_only]
    full = den != 0
    q[full] = num[full] / den[full]
    return float(q.mean())


def qilv(a: GrayImage, b: GrayImage) -> float:
    """Quality index based on local variance.

    Local variances come from an 11x11 Gaussian window (sigma 1.5) over the
    valid region. The result is the product of a mean, a deviation and a
    correlation factor of the two variance maps, each stabilised with
    ``1e-12``, so two constant images score 1. The value lies in ``[-1, 1]``.
    """
    x, y = _pair(a, b)
    _check_window(x, 2 * SSIM_RADIUS + 1)

    def local_var(img):
        img = img - img.mean()
        m = _gaussian_valid(img)
        return np.maximum(_gaussian_valid(img * img) - m * m, 0.0)

    v1, v2 = local_var(x), local_var(y)
    m1, m2 = v1.mean(), v2.mean()
    d1, d2 = v1 - m1, v2 - m2
    s1, s2 = math.sqrt(np.mean(d1 * d1)), math.sqrt(np.mean(d2 * d2))
    s12 = np.mean(d1 * d2)
    f1 = (2 * m1 * m2 + EPS) / (m1 * m1 + m2 * m2 + EPS)
    f2 = (2 * s1 * s2 + EPS) / (s1 * s1 + s2 * s2 + EPS)
    f3 = (s12 + EPS) / (s1 * s2 + EPS)
    return float(f1 * f2 * f3)


# --- FSIM ---------------------------------------------------------------------

_PC_SCALES, _PC_ORIENT = 4, 4
_PC_MIN_WAVELENGTH, _PC_MULT = 6, 2
_PC_SIGMA_ONF, _PC_DTHETA_ON_SIGMA, _PC_K = 0.55, 1.2, 2.0
_FEPS = np.finfo(np.float64).eps


def _axis_grid(n: int) -> np.ndarray:
    if n % 2:
        return np.arange(-(n - 1) / 2, n / 2) / (n - 1)
    return np.arange(-n / 2, n / 2) / n


def _log_gabor_bank(h: int, w: int) -> np.ndarray:
    """Filters ``(orientations, scales, h, w)`` in unshifted frequency layout."""
    gx, gy = np.meshgrid(_axis_grid(h), _axis_grid(w), indexing="ij")
    radius = np.sqrt(gx**2 + gy**2)
    theta = np.arctan2(-gy, gx)
    lowpass = np.fft.ifftshift(1.0 / (1.0 + (radius / 0.45) ** 30))
    radius = np.fft.ifftshift(radius)
    theta = np.fft.ifftshift(theta)
    radius[0, 0] = 1.0
    sin_t, cos_t = np.sin(theta), np.cos(theta)

    radial = []
    for s in range(_PC_SCALES):
        f0 = 1.0 / (_PC_MIN_WAVELENGTH * _PC_MULT**s)
        g = np.exp(-(np.log(radius / f0) ** 2) / (2 * math.log(_PC_SIGMA_ONF) ** 2)) * lowpass
        g[0, 0] = 0.0
        radial.append(g)

    theta_sigma = math.pi / (_PC_ORIENT * _PC_DTHETA_ON_SIGMA)
    bank = np.empty((_PC_ORIENT, _PC_SCALES, h, w))
    for o in range(_PC_ORIENT):
        ang = o * math.pi / _PC_ORIENT
        ds = sin_t * math.cos(ang) - cos_t * math.sin(ang)
        dc = cos_t * math.cos(ang) + sin_t * math.sin(ang)
        spread = np.exp(-(np.arctan2(ds, dc) ** 2) / (2 * theta_sigma**2))
        for s in range(_PC_SCALES):
            bank[o, s] = spread * radial[s]
    return bank


def _phase_congruency(img: np.ndarray, bank: np.ndarray) -> np.ndarray:
    h, w = img.shape
    eo = np.fft.ifft2(np.fft.fft2(img)[None, None] * bank)
    even, odd = eo.real, eo.imag
    amplitude = np.abs(eo)

    sum_e = even.sum(axis=1, keepdims=True)
    sum_o = odd.sum(axis=1, keepdims=True)
    x_energy = np.sqrt(sum_e**2 + sum_o**2) + _FEPS
    mean_e, mean_o = sum_e / x_energy, sum_o / x_energy
    energy = (even * mean_e + odd * mean_o - np.abs(even * mean_o - odd * mean_e)).sum(axis=1)

    # noise statistics from the smallest scale, per orientation
    em_n = (bank[:, 0] ** 2).sum(axis=(-2, -1))
    # lower median, as in the reference port
    sq = np.sort((amplitude[:, 0] ** 2).reshape(_PC_ORIENT, -1), axis=1)
    median_e2n = sq[:, (sq.shape[1] - 1) // 2]
    noise_power = (-median_e2n / math.log(0.5)) / em_n
    spatial = np.fft.ifft2(bank).real * math.sqrt(h * w)
    sum_an2 = (spatial**2).sum(axis=(1, 2, 3))
    sum_ai_aj = np.zeros(_PC_ORIENT)
    for s in range(_PC_SCALES - 1):
        sum_ai_aj += (spatial[:, s : s + 1] * spatial[:, s + 1 :]).sum(axis=(1, 2, 3))
    tau = np.sqrt((2 * noise_power * sum_an2 + 4 * noise_power * sum_ai_aj) / 2)
    threshold = tau * math.sqrt(math.pi / 2) + _PC_K * np.sqrt((2 - math.pi / 2) * tau**2)
    threshold = threshold / 1.7

    energy = np.maximum(energy - threshold[:, None, None], 0.0)
    return (energy.sum(axis=0) + _FEPS) / (amplitude.sum(axis=(0, 1)) + _FEPS)


def _gradient_magnitude(img: np.ndarray) -> np.ndarray:
    k = np.array([[-3.0, 0.0, 3.0], [-10.0, 0.0, 10.0], [-3.0, 0.0, 3.0]]) / 16.0
    gx = ndimage.correlate(img, k, mode="constant")
    gy = ndimage.correlate(img, k.T, mode="constant")
    return np.sqrt(gx**2 + gy**2)


def _average_downsample(img: np.ndarray, f: int) -> np.ndarray:
    if f == 1:
        return img
    h, w = (img.shape[0] // f) * f, (img.shape[1] // f) * f
    return img[:h, :w].reshape(h // f, f, w // f, f).mean(axis=(1, 3))


def _similarity(m1, m2, c):
    return (2.0 * m1 * m2 + c) / (m1**2 + m2**2 + c)


def fsim(a: GrayImage, b: GrayImage) -> float:
    """Feature similarity index (luminance only)."""
    x, y = _pair(a, b)
    f = max(1, round(min(x.shape) / 256))
    x, y = _average_downsample(x, f), _average_downsample(y, f)
    bank = _log_gabor_bank(*x.shape)
    pc_x, pc_y = _phase_congruency(x, bank), _phase_congruency(y, bank)
    s_l = _similarity(pc_x, pc_y, FSIM_T1) * _similarity(
        _gradient_magnitude(x), _gradient_magnitude(y), FSIM_T2
    )
    pc_m = np.maximum(pc_x, pc_y)
    total = pc_m.sum()
    if total == 0:
        return float(s_l.mean())
    return float((s_l * pc_m).sum() / total)


# --- HaarPSI ------------------------------------------------------------------


def _haar_kernel(size: int) -> np.ndarray:
    k = np.ones((size, size)) / size
    k[size // 2 :, :] *= -1
    return k


def _haar_coefficients(img: np.ndarray, scales: int = 3) -> list[np.ndarray]:
    out = []
    for s in range(scales):
        size = 2 ** (s + 1)
        k = _haar_kernel(size)
        padded = np.pad(img, ((size // 2 - 1, size // 2), (size // 2 - 1, size // 2)))
        out.append(signal.correlate2d(padded, k, mode="valid"))
        out.append(signal.correlate2d(padded, k.T, mode="valid"))
    return out


def hpsi(a: GrayImage, b: GrayImage) -> float:
    """Haar wavelet-based perceptual similarity index (grayscale)."""
    x, y = _pair(a, b)
    if min(x.shape) < 16:
        raise ValueError(f"image {x.shape} smaller than the 16x16 Haar support")

    def subsample(img):
        pad_r, pad_c = img.shape[0] % 2, img.shape[1] % 2
        pad = max(pad_r, pad_c)
        img = np.pad(img, ((0, pad), (0, pad)))
        h, w = (img.shape[0] // 2) * 2, (img.shape[1] // 2) * 2
        return img[:h, :w].reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))

    cx, cy = _haar_coefficients(subsample(x)), _haar_coefficients(subsample(y))
    weights = [np.maximum(np.abs(cx[4 + o]), np.abs(cy[4 + o])) for o in range(2)]
    sims = [
        (_similarity(np.abs(cx[o]), np.abs(cy[o]), HPSI_C)
         + _similarity(np.abs(cx[o + 2]), np.abs(cy[o + 2]), HPSI_C)) / 2.0
        for o in range(2)
    ]
    wsum = sum(float(w.sum()) for w in weights)
    if wsum == 0.0:
        return 1.0
    sig = sum(float((w / (1.0 + np.exp(-HPSI_ALPHA * s))).sum()) for w, s in zip(weights, sims))
    score = sig / wsum
    if score >= 1.0:
        return 1.0
    return (math.log(score / (1.0 - score)) / HPSI_ALPHA) ** 2


# --- report -------------------------------------------------------------------


CSV_HEADER = ("image", "n_thresholds", "psnr", "ssim", "fsim", "uiqi", "qilv", "hpsi", "time_s")


@dataclass(frozen=True)
class MetricReport:
    psnr: float
    ssim: float
    fsim: float
    uiqi: float
    qilv: float
    hpsi: float

    @property
    def psnr_infinite(self) -> bool:
        return math.isinf(self.psnr)

    def to_dict(self) -> dict:
        d = {name: getattr(self, name) for name in METRIC_NAMES}
        if self.psnr_infinite:
            d["psnr"] = None
        d["psnr_infinite"] = self.psnr_infinite
        return d

    def csv_row(self, image: str, n_thresholds: int, time_s: float) -> list[str]:
        p = "inf" if self.psnr_infinite else f"{self.psnr:.4f}"
        vals = [f"{getattr(self, n):.4f}" for n in METRIC_NAMES[1:]]
        return [image, str(n_thresholds), p, *vals, f"{time_s:.3f}"]


def evaluate(a: GrayImage, b: GrayImage, uiqi_windowed: bool = False) -> MetricReport:
    """All six metrics for one (original, segmented) pair."""
    return MetricReport(
        psnr=psnr(a, b),
        ssim=ssim(a, b),
        fsim=fsim(a, b),
        uiqi=uiqi(a, b, windowed=uiqi_windowed),
        qilv=qilv(a, b),
        hpsi=hpsi(a, b),
    )
