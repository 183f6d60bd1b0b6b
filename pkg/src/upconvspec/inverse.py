"""Spectrum recovery from raw scans: Richardson-Lucy deconvolution.

The raw scan is the input spectrum blurred by the instrument response
(QPM acceptance x VBG line) and sitting on a pump-induced count pedestal.
Richardson-Lucy is the natural inverse here: multiplicative, nonnegative,
and the fixed point of Poisson maximum likelihood, which is exactly the
noise the counter produces.  Iterations stop on the discrepancy principle
-- when the Pearson chi^2 per point falls to its statistical expectation --
so noise is not amplified into ringing; a Tikhonov-regularized linear solve
is available as a cross-check alternative.
"""
from dataclasses import dataclass

import numpy as np

from .errors import BackgroundError, DomainError, UnrecoverableBandError
from .spectra import Spectrum

_CLIP_SIGMA = 3.5
_MIN_BASELINE_POINTS = 5


def estimate_background(result, noise_model=None):
    """Baseline count rate [cps] from a scan's off-band points.

    Iterative sigma clip on the per-point rates: alternate between the mean
    of the kept set and a Poisson width sqrt(mean/dwell), dropping points
    more than 3.5 sigma away, until the kept set stabilizes.  Signal peaks
    are clipped from above; a two-sided clip at 3.5 sigma is bias-free at
    the precision the Poisson standard error allows.  Falls back to the
    noise model's rate if the scan has no usable baseline (raises
    BackgroundError without one).
    """
    rates = np.asarray(result.expected_rate_cps, dtype=float)
    if np.any(result.sampled_counts > 0):
        rates = np.asarray(result.sampled_counts, dtype=float) / result.dwell_s
    if rates.size < _MIN_BASELINE_POINTS:
        raise BackgroundError(
            f"scan has {rates.size} points; need at least {_MIN_BASELINE_POINTS}"
        )

    def _fallback(reason):
        if noise_model is not None:
            return float(noise_model.rate(result.pump_power_mw))
        raise BackgroundError(reason + " and no noise model was supplied")

    keep = np.ones(rates.size, dtype=bool)
    mu = float(np.median(rates))
    for _ in range(50):
        if mu < 0:
            mu = 0.0
        sigma = np.sqrt(max(mu / result.dwell_s, 1e-12))
        new = np.abs(rates - mu) <= _CLIP_SIGMA * sigma
        if not np.any(new):
            return _fallback("sigma clip emptied the scan (no flat baseline)")
        new_mu = float(np.mean(rates[new]))
        if np.array_equal(new, keep) and abs(new_mu - mu) < 1e-12:
            break
        keep, mu = new, new_mu

    n_kept = int(np.count_nonzero(keep))
    if n_kept < max(_MIN_BASELINE_POINTS, rates.size // 10):
        return _fallback(
            f"only {n_kept} of {rates.size} points form a flat baseline; "
            "scan looks saturated by signal"
        )
    # Baseline sanity: kept counts should be Poisson-flat (Fano near 1).
    counts = rates[keep] * result.dwell_s
    mean_c = float(np.mean(counts))
    if mean_c > 0 and n_kept > 10:
        fano = float(np.var(counts)) / mean_c
        if fano > 5.0:
            return _fallback(
                f"baseline variance is {fano:.1f}x Poisson; no flat floor found"
            )
    return max(mu, 0.0)


@dataclass(frozen=True)
class DeconvolutionResult:
    estimate: Spectrum
    iterations_used: int
    residual_norm: float          # Pearson chi^2 per point at the last iterate
    stop_reason: str              # discrepancy_reached | max_iterations | stagnation
    background_cps: float


def _counts_vector(raw, use_expected):
    if use_expected is None:
        use_expected = not bool(np.any(raw.sampled_counts > 0))
    if use_expected:
        return np.asarray(raw.expected_rate_cps, dtype=float) * raw.dwell_s
    return np.asarray(raw.sampled_counts, dtype=float)


def deconvolve(raw, kernel, max_iters=500, discrepancy_target=1.0,
               background_cps=None, noise_model=None, support_nm=None,
               use_expected=None):
    """Richardson-Lucy estimate of the input spectral density [W/nm].

    raw/kernel must share the scan grid.  Background (model, explicit value,
    or estimated off-band baseline) is subtracted first, clamped at zero.
    Iterations run until the Pearson discrepancy chi^2/N drops to
    discrepancy_target (use 0 for noiseless rate data), the update
    stagnates, or max_iters.  The estimate is supported on the kernel
    columns inside support_nm (default: the scan's mapped signal range);
    columns that are identically zero inside the support make those bands
    unrecoverable and raise UnrecoverableBandError.
    """
    d = _counts_vector(raw, use_expected)
    if d.size < 3:
        raise DomainError("scan shorter than 3 points cannot be deconvolved")
    if d.size != kernel.pump_grid_nm.size:
        raise DomainError("scan length does not match the kernel's pump grid")
    if np.any(d < 0):
        raise DomainError("negative counts in scan")
    if max_iters < 1:
        raise DomainError("max_iters must be at least 1")

    if background_cps is None:
        background_cps = estimate_background(raw, noise_model=noise_model)
    if background_cps < 0:
        raise DomainError("background rate must be nonnegative")
    d_sig = np.maximum(d - background_cps * raw.dwell_s, 0.0)

    grid = kernel.signal_grid_nm
    if support_nm is None:
        lo = float(np.min(kernel.mapped_signal_nm))
        hi = float(np.max(kernel.mapped_signal_nm))
    else:
        lo, hi = float(support_nm[0]), float(support_nm[1])
        if not lo < hi:
            raise DomainError("support_nm must be an ascending (lo, hi) pair")
    in_support = (grid >= lo) & (grid <= hi)
    if not np.any(in_support):
        raise DomainError("requested support contains no signal-grid points")

    # Forward matrix: density [W/nm] -> expected signal counts per point.
    weights = np.gradient(grid)
    m = kernel.matrix * (weights[None, :] * raw.dwell_s)
    col_sum = m.sum(axis=0)
    dead = in_support & (col_sum <= 0.0)
    if np.any(dead):
        bands = []
        idx = np.flatnonzero(dead)
        start = idx[0]
        prev = idx[0]
        for k in idx[1:]:
            if k != prev + 1:
                bands.append((float(grid[start]), float(grid[prev])))
                start = k
            prev = k
        bands.append((float(grid[start]), float(grid[prev])))
        raise UnrecoverableBandError(bands)

    active = in_support
    m_act = m[:, active]
    norm = m_act.sum(axis=0)  # > 0 by the dead-column check

    total = float(d_sig.sum())
    if total == 0.0:
        est = np.zeros(grid.size)
        return DeconvolutionResult(
            estimate=Spectrum(grid, est, unit="w_per_nm"),
            iterations_used=0, residual_norm=_pearson(d, background_cps, raw, m, est),
            stop_reason="discrepancy_reached", background_cps=float(background_cps),
        )

    x = np.full(m_act.shape[1], total / m_act.sum())
    bg_counts = background_cps * raw.dwell_s
    stop_reason = "max_iterations"
    iters = 0
    for iters in range(1, max_iters + 1):
        model = m_act @ x
        ratio = np.where(model > 0, d_sig / np.where(model > 0, model, 1.0), 0.0)
        x_new = x * (m_act.T @ ratio) / norm
        step = np.linalg.norm(x_new - x)
        x = x_new
        # Pearson discrepancy on the raw counts against the full model
        # (signal + pedestal): at the Poisson noise level this sits at ~1.
        model = m_act @ x + bg_counts
        chi2 = float(np.mean((d - model) ** 2 / np.maximum(model, 1.0)))
        if chi2 <= discrepancy_target:
            stop_reason = "discrepancy_reached"
            break
        if step <= 1e-9 * max(np.linalg.norm(x), 1e-300):
            stop_reason = "stagnation"
            break

    est = np.zeros(grid.size)
    est[active] = x
    return DeconvolutionResult(
        estimate=Spectrum(grid, est, unit="w_per_nm"),
        iterations_used=iters,
        residual_norm=_pearson(d, background_cps, raw, m, est),
        stop_reason=stop_reason,
        background_cps=float(background_cps),
    )


def _pearson(d, background_cps, raw, m, est):
    model = m @ est + background_cps * raw.dwell_s
    return float(np.mean((d - model) ** 2 / np.maximum(model, 1.0)))


def tikhonov(raw, kernel, alpha=1e-3, background_cps=None, noise_model=None,
             use_expected=None):
    """Linear least-squares alternative with L2 penalty, clamped nonnegative.

    Solves min ||M x - d'||^2 + alpha^2 ||x||^2 on the background-subtracted
    counts; useful as a linear cross-check on the RL estimate.  alpha is
    relative to the largest kernel singular value.
    """
    d = _counts_vector(raw, use_expected)
    if background_cps is None:
        background_cps = estimate_background(raw, noise_model=noise_model)
    d_sig = np.maximum(d - background_cps * raw.dwell_s, 0.0)
    grid = kernel.signal_grid_nm
    weights = np.gradient(grid)
    m = kernel.matrix * (weights[None, :] * raw.dwell_s)
    s_max = np.linalg.norm(m, 2)
    a = np.vstack([m, alpha * s_max * np.eye(m.shape[1])])
    b = np.concatenate([d_sig, np.zeros(m.shape[1])])
    x, *_ = np.linalg.lstsq(a, b, rcond=None)
    x = np.maximum(x, 0.0)
    return DeconvolutionResult(
        estimate=Spectrum(grid, x, unit="w_per_nm"),
        iterations_used=1,
        residual_norm=_pearson(d, background_cps, raw, m, x),
        stop_reason="discrepancy_reached",
        background_cps=float(background_cps),
    )
