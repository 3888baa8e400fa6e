"""Constrained multi-Lorentzian and Gaussian profile fitting for spectra."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize
from scipy.signal import find_peaks

_SQRT_8LN2 = 2.0 * np.sqrt(2.0 * np.log(2.0))


@dataclass(frozen=True)
class LorentzianModel:
    """Sum of Lorentzian peaks over a constant baseline.

    Amplitudes are peak heights; when the equal-width constraint is active a
    single FWHM is shared across all peaks (parameter sharing, not a penalty).
    """

    centers: np.ndarray
    fwhm: np.ndarray
    amplitudes: np.ndarray
    baseline: float

    def __post_init__(self):
        centers = np.atleast_1d(np.asarray(self.centers, dtype=float))
        amplitudes = np.atleast_1d(np.asarray(self.amplitudes, dtype=float))
        fwhm = np.broadcast_to(np.asarray(self.fwhm, dtype=float), centers.shape).copy()
        if centers.shape != amplitudes.shape:
            raise ValueError("centers and amplitudes must have equal length")
        order = np.argsort(centers)
        object.__setattr__(self, "centers", centers[order])
        object.__setattr__(self, "amplitudes", amplitudes[order])
        object.__setattr__(self, "fwhm", fwhm[order])

    @property
    def n_peaks(self) -> int:
        return len(self.centers)

    @property
    def common_fwhm(self) -> float:
        return float(self.fwhm[0])

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.full_like(x, self.baseline)
        for c, w, a in zip(self.centers, self.fwhm, self.amplitudes):
            q = (0.5 * w) ** 2
            y += a * q / ((x - c) ** 2 + q)
        return y


@dataclass(frozen=True)
class FitQuality:
    residual_rms: float
    converged: bool
    degenerate: bool = False
    n_peaks_found: int | None = None
    message: str = ""


def _seed_centers(x: np.ndarray, y: np.ndarray, n_peaks: int):
    """Prominence-ranked local maxima as initial peak positions."""
    span = float(y.max() - y.min())
    if span <= 0:
        return np.array([]), np.array([])
    idx, props = find_peaks(y, prominence=0.02 * span)
    if len(idx) == 0:
        return np.array([]), np.array([])
    order = np.argsort(props["prominences"])[::-1][:n_peaks]
    sel = np.sort(idx[order])
    return x[sel], y[sel] - y.min()


def _pack(model: LorentzianModel, equal_width: bool) -> np.ndarray:
    if equal_width:
        return np.concatenate([model.centers, [model.common_fwhm],
                               model.amplitudes, [model.baseline]])
    return np.concatenate([model.centers, model.fwhm, model.amplitudes,
                           [model.baseline]])


def _unpack(p: np.ndarray, n: int, equal_width: bool) -> LorentzianModel:
    if equal_width:
        centers, fwhm, amps, base = p[:n], abs(p[n]), p[n + 1:2 * n + 1], p[2 * n + 1]
    else:
        centers, fwhm, amps, base = p[:n], np.abs(p[n:2 * n]), p[2 * n:3 * n], p[3 * n]
    return LorentzianModel(centers=centers, fwhm=fwhm, amplitudes=amps,
                           baseline=float(base))


def _jacobian(p: np.ndarray, x: np.ndarray, n: int, equal_width: bool) -> np.ndarray:
    """Analytic Jacobian of the residual (model - data) in the packed layout."""
    m = len(x)
    jac = np.zeros((m, len(p)))
    if equal_width:
        centers, w, amps = p[:n], abs(p[n]), p[n + 1:2 * n + 1]
        widths = np.full(n, w)
    else:
        centers, widths, amps = p[:n], np.abs(p[n:2 * n]), p[2 * n:3 * n]
    for k in range(n):
        d = x - centers[k]
        q = (0.5 * widths[k]) ** 2
        denom = d * d + q
        u = q / denom
        jac_amp = u
        jac_c = amps[k] * 2.0 * d * q / (denom * denom)
        jac_w = amps[k] * (0.5 * widths[k]) * d * d / (denom * denom)
        if equal_width:
            jac[:, k] = jac_c
            jac[:, n] += jac_w * np.sign(p[n]) if p[n] != 0 else jac_w
            jac[:, n + 1 + k] = jac_amp
        else:
            jac[:, k] = jac_c
            jac[:, n + k] = jac_w * (np.sign(p[n + k]) or 1.0)
            jac[:, 2 * n + k] = jac_amp
    jac[:, -1] = 1.0
    return jac


def fit_lorentzians(x, y, n_peaks: int, equal_width: bool = True,
                    init: LorentzianModel | None = None) -> tuple[LorentzianModel, FitQuality]:
    """Least-squares multi-Lorentzian fit with optional shared linewidth.

    Initial centers come from the init model or from the n_peaks most
    prominent local maxima. Damped least squares with the analytic Jacobian is
    tried first and a simplex fallback guards against non-convergence; the
    returned model never has a worse residual than its initializer.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d arrays of equal length")
    if n_peaks < 1:
        raise ValueError("n_peaks must be >= 1")
    if len(x) < 4 * n_peaks + 2:
        raise ValueError("not enough points for the requested number of peaks")

    span = float(y.max() - y.min())
    if span == 0.0:
        model = LorentzianModel(centers=np.zeros(n_peaks) + x.mean(),
                                fwhm=np.full(n_peaks, np.diff(x).mean()),
                                amplitudes=np.zeros(n_peaks), baseline=0.0)
        quality = FitQuality(residual_rms=0.0, converged=True, degenerate=True,
                             n_peaks_found=0, message="flat signal; fit degenerate")
        return model, quality

    n_found = None
    message = ""
    if init is None:
        centers0, heights0 = _seed_centers(x, y, n_peaks)
        n_found = len(centers0)
        n_fit = n_peaks
        if n_found == 0:
            centers0 = np.linspace(x[0], x[-1], n_peaks + 2)[1:-1]
            heights0 = np.full(n_peaks, span)
            message = "no clear local maxima; seeded uniformly"
        elif n_found < n_peaks:
            n_fit = n_found
            message = f"only {n_found} of {n_peaks} peaks detectable; fitted {n_found}"
        width0 = max(4.0 * float(np.diff(x).mean()), (x[-1] - x[0]) / (8.0 * n_fit))
        init = LorentzianModel(centers=centers0[:n_fit], fwhm=width0,
                               amplitudes=np.resize(heights0, n_fit),
                               baseline=float(y.min()))
    n_fit = init.n_peaks

    def residual(p):
        return _unpack(p, n_fit, equal_width)(x) - y

    p0 = _pack(init, equal_width)
    cost0 = float(np.sum(residual(p0) ** 2))
    converged = True
    try:
        res = least_squares(residual, p0, method="lm",
                            jac=lambda p: _jacobian(p, x, n_fit, equal_width),
                            max_nfev=20000)
        p_best, cost = res.x, 2.0 * res.cost
        converged = res.status > 0
    except Exception:
        converged = False
        p_best, cost = p0, cost0
    if not converged or cost > cost0:
        simplex = minimize(lambda p: float(np.sum(residual(p) ** 2)), p0,
                           method="Nelder-Mead",
                           options=dict(maxiter=20000, xatol=1e-10, fatol=1e-14))
        if simplex.fun < cost:
            p_best, cost = simplex.x, simplex.fun
            converged = simplex.success
    if cost > cost0:
        p_best, cost = p0, cost0

    model = _unpack(p_best, n_fit, equal_width)
    quality = FitQuality(residual_rms=float(np.sqrt(cost / len(x))),
                         converged=converged, n_peaks_found=n_found,
                         message=message)
    return model, quality


@dataclass(frozen=True)
class GaussianFit:
    center: float
    fwhm: float
    amplitude: float
    baseline: float
    under_resolved: bool
    residual_rms: float

    @property
    def sigma(self) -> float:
        return self.fwhm / _SQRT_8LN2


def gaussian_profile_fit(x, y) -> GaussianFit:
    """Least-squares single-Gaussian fit of a broadened excitation profile.

    Flags the result as under-resolved when the fitted FWHM falls below two
    grid steps.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or len(x) < 5:
        raise ValueError("need matching 1-d arrays with at least 5 points")
    step = float(np.diff(x).mean())
    span = float(y.max() - y.min())
    if span == 0.0:
        return GaussianFit(center=float(x.mean()), fwhm=0.0, amplitude=0.0,
                           baseline=float(y[0]), under_resolved=True,
                           residual_rms=0.0)

    c0 = float(x[np.argmax(y)])
    weights = np.clip(y - y.min(), 0, None)
    sigma0 = max(np.sqrt(np.average((x - c0) ** 2, weights=weights + 1e-30)), step)

    def residual(p):
        a, c, sigma, b = p
        return b + a * np.exp(-0.5 * ((x - c) / sigma) ** 2) - y

    res = least_squares(residual, [span, c0, sigma0, float(y.min())])
    a, c, sigma, b = res.x
    sigma = abs(sigma)
    fwhm = sigma * _SQRT_8LN2
    return GaussianFit(center=float(c), fwhm=float(fwhm), amplitude=float(a),
                       baseline=float(b), under_resolved=bool(fwhm < 2.0 * step),
                       residual_rms=float(np.sqrt(2.0 * res.cost / len(x))))
