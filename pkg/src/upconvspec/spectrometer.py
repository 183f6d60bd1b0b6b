"""Pump-scanned single-pixel spectrometer: kernel, tracking, forward model.

Scanning the pump wavelength slides the phase-matched signal wavelength
across the band of interest, so one counting detector plus the QPM
acceptance curve acts as a scanning monochromator.  The instrument response
to a signal spectral density S(lambda) [W/nm] at scan point i is

    rate_i = sum_j K[i][j] S(lambda_j) dlambda_j + noise(P)

with K the dense response kernel built here.  Each kernel row combines the
QPM sinc^2 lineshape, the filter-chain transmission at the upconverted
wavelength (VBG tracked or fixed), and the pinned conversion efficiency,
normalized so a phase-matched monochromatic input of power W with a tracked
VBG produces eta(P) * W / (h nu) counts/s.
"""
from dataclasses import dataclass, replace

import numpy as np

from . import dispersion
from .components import VbgState, transmission, vbg_transmission
from .counting import rng_from_path, sample_poisson
from .errors import CoverageError, DomainError, TuningError
from .units import photon_energy_j

SIGNAL_GRID_STEP_NM = 0.02
_GRID_PAD_NM = 1.5  # sinc^2 tails beyond the mapped range worth keeping


@dataclass(frozen=True)
class ScanPlan:
    """One pump sweep: range, step, dwell, power, tracking mode, seed."""

    pump_start_nm: float = 1920.0
    pump_stop_nm: float = 1980.0
    pump_step_nm: float = 0.05
    dwell_s: float = 1.0
    pump_power_mw: float = 30.0
    vbg_tracking: str = "tracked"
    seed: int = 20240901

    def __post_init__(self):
        if not (self.pump_start_nm < self.pump_stop_nm):
            raise DomainError("scan needs pump_start_nm < pump_stop_nm")
        if self.pump_step_nm <= 0 or self.dwell_s <= 0:
            raise DomainError("pump_step_nm and dwell_s must be positive")
        if self.pump_power_mw <= 0:
            raise DomainError("scan pump power must be positive")
        if self.vbg_tracking not in ("tracked", "fixed"):
            raise DomainError(f"vbg_tracking must be tracked|fixed, got {self.vbg_tracking!r}")

    def pump_grid_nm(self):
        n = int(round((self.pump_stop_nm - self.pump_start_nm) / self.pump_step_nm))
        return self.pump_start_nm + self.pump_step_nm * np.arange(n + 1)


@dataclass(frozen=True)
class TrackingSchedule:
    """Per-point VBG setpoints plus the fixed-mode feasibility numbers."""

    centers_nm: np.ndarray
    tracking_required: bool
    fixed_center_nm: float
    sfg_drift_nm: float           # full phase-matched SFG drift across the scan
    usable_span_nm: float         # fixed-VBG signal span (SFG within +-FWHM/2)
    mode: str


def fixed_vbg_usable_span(plan, wg, vbg, n_probe=601):
    """Signal span [nm] a fixed VBG covers at >= half the tracked sensitivity.

    For a line at each probe signal wavelength, the detected peak rate with
    the VBG parked at the scan-center SFG wavelength is the maximum over
    pump of sinc^2(dk L/2) x VBG(sfg); tracked operation scores the full VBG
    peak there.  The usable span is the contiguous mapped-signal band around
    scan center where the fixed/tracked sensitivity ratio stays >= 1/2.
    The QPM acceptance width matters here: the upconverted line is several
    times wider than the VBG, so a line stays usable well after its nominal
    center has left the VBG passband.
    """
    probe_pump = np.linspace(plan.pump_start_nm, plan.pump_stop_nm, n_probe)
    probe_sig = dispersion.phase_matched_signal(probe_pump, wg)
    center_pump = 0.5 * (plan.pump_start_nm + plan.pump_stop_nm)
    center_sig = dispersion.phase_matched_signal(center_pump, wg)
    fixed_center = dispersion.sfg_wavelength(center_sig, center_pump)

    # maximize the line x gate product over pump detuning around each probe
    off = np.linspace(-3.0, 3.0, 241)
    q = probe_pump[:, None] + off[None, :]
    dk = dispersion.qpm_mismatch(probe_sig[:, None], q, wg)
    line = dispersion.efficiency_factor(dk, wg.length_mm)
    gate = vbg_transmission(vbg, dispersion.sfg_wavelength(probe_sig[:, None], q),
                            center_nm=fixed_center)
    ratio = np.max(line * gate, axis=1) / vbg.peak_reflectance

    ok = ratio >= 0.5
    i0 = int(np.argmin(np.abs(probe_pump - center_pump)))
    if not ok[i0]:
        return 0.0, float(fixed_center)
    lo = i0
    while lo > 0 and ok[lo - 1]:
        lo -= 1
    hi = i0
    while hi < ok.size - 1 and ok[hi + 1]:
        hi += 1
    return float(abs(probe_sig[hi] - probe_sig[lo])), float(fixed_center)


def vbg_tracking_schedule(plan, wg, vbg):
    """VBG setpoints for a scan; reports whether a fixed VBG could cope.

    tracked: each point's setpoint is the phase-matched SFG wavelength.
    fixed: one setpoint at the scan-center SFG wavelength for every point.
    Either way the schedule reports the phase-matched SFG drift over the
    scan and the fixed-VBG usable span (see fixed_vbg_usable_span).
    """
    pump = plan.pump_grid_nm()
    sig = dispersion.phase_matched_signal(pump, wg)
    sfg = dispersion.sfg_wavelength(sig, pump)

    drift = float(np.max(sfg) - np.min(sfg))
    tracking_required = drift > vbg.fwhm_nm
    usable, fixed_center = fixed_vbg_usable_span(plan, wg, vbg)

    centers = sfg if plan.vbg_tracking == "tracked" else np.full_like(pump, fixed_center)
    lo_nm, hi_nm = vbg.tuning_range_nm
    if np.any(centers < lo_nm) or np.any(centers > hi_nm):
        bad = centers[(centers < lo_nm) | (centers > hi_nm)]
        raise TuningError(
            f"VBG setpoint {bad[0]:.3f} nm outside tuning range [{lo_nm}, {hi_nm}] nm"
        )
    return TrackingSchedule(
        centers_nm=centers, tracking_required=bool(tracking_required),
        fixed_center_nm=fixed_center, sfg_drift_nm=drift,
        usable_span_nm=usable, mode=plan.vbg_tracking,
    )


@dataclass(frozen=True)
class ResponseKernel:
    """Dense instrument response: counts/s per W of monochromatic input.

    matrix[i][j] is the expected count rate at scan point i per watt of
    input at signal_grid_nm[j].  mapped_signal_nm[i] is scan point i's
    phase-matched signal wavelength (the scan's native abscissa).
    """

    pump_grid_nm: np.ndarray
    signal_grid_nm: np.ndarray
    matrix: np.ndarray
    mapped_signal_nm: np.ndarray
    vbg_centers_nm: np.ndarray
    pump_power_mw: float
    efficiency: float
    vbg_tracking: str


def default_signal_grid(wg, plan, step_nm=SIGNAL_GRID_STEP_NM, pad_nm=_GRID_PAD_NM):
    """Ascending grid covering the scan's mapped signal range plus tails."""
    pump = plan.pump_grid_nm()
    mapped = dispersion.phase_matched_signal(np.array([pump[0], pump[-1]]), wg)
    lo = float(np.min(mapped)) - pad_nm
    hi = float(np.max(mapped)) + pad_nm
    n = int(np.ceil((hi - lo) / step_nm))
    return lo + step_nm * np.arange(n + 1)


def build_kernel(wg, chain, vbg, conv_model, plan, signal_grid_nm=None):
    """Response kernel for a calibrated waveguide, filter chain, and plan.

    chain holds the fixed FilterElements (edge, band-pass, broadband loss);
    the VBG is passed separately because its center follows the tracking
    schedule.  Normalization: peak response with tracked VBG equals
    eta(P)/h-nu counts/s per W, so the chain contributes lineshape only --
    its absolute throughput is already inside the pinned eta.
    """
    pump = plan.pump_grid_nm()
    mapped = dispersion.phase_matched_signal(pump, wg)
    if signal_grid_nm is None:
        grid = default_signal_grid(wg, plan)
    else:
        grid = np.asarray(signal_grid_nm, dtype=float)
        if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
            raise DomainError("signal grid must be 1-D strictly ascending")
        lo_need, hi_need = float(np.min(mapped)), float(np.max(mapped))
        if grid[0] > lo_need or grid[-1] < hi_need:
            gaps = []
            if grid[0] > lo_need:
                gaps.append((lo_need, float(grid[0])))
            if grid[-1] < hi_need:
                gaps.append((float(grid[-1]), hi_need))
            raise CoverageError(
                "signal grid does not cover the scan's mapped range "
                f"[{lo_need:.3f}, {hi_need:.3f}] nm; missing " +
                ", ".join(f"[{a:.3f}, {b:.3f}]" for a, b in gaps)
            )

    schedule = vbg_tracking_schedule(plan, wg, vbg)
    eta = conv_model.efficiency(plan.pump_power_mw)

    lam_s = grid[None, :]
    lam_p = pump[:, None]
    qpm = dispersion.efficiency_factor(dispersion.qpm_mismatch(lam_s, lam_p, wg),
                                       wg.length_mm)
    sfg = dispersion.sfg_wavelength(lam_s, lam_p)

    t_actual = vbg_transmission(vbg, sfg, center_nm=schedule.centers_nm[:, None])
    for el in chain:
        t_actual = t_actual * transmission(el, sfg)

    # Reference throughput: tracked VBG at each row's phase-matched SFG.
    sfg_pm = dispersion.sfg_wavelength(mapped, pump)
    t_ref = np.full(pump.shape, vbg.peak_reflectance)
    for el in chain:
        t_ref = t_ref * transmission(el, sfg_pm)
    if np.any(t_ref <= 0):
        raise DomainError(
            "filter chain blocks the phase-matched upconverted wavelength; "
            "reference throughput is zero"
        )

    per_photon = photon_energy_j(grid)  # J per photon at each signal bin
    matrix = eta * qpm * (t_actual / t_ref[:, None]) / per_photon[None, :]
    return ResponseKernel(
        pump_grid_nm=pump, signal_grid_nm=grid, matrix=matrix,
        mapped_signal_nm=mapped, vbg_centers_nm=schedule.centers_nm,
        pump_power_mw=plan.pump_power_mw, efficiency=float(eta),
        vbg_tracking=plan.vbg_tracking,
    )


@dataclass(frozen=True)
class ScanResult:
    """One executed scan: expectations and the Poisson-sampled counts."""

    pump_grid_nm: np.ndarray
    signal_nm_mapped: np.ndarray
    expected_rate_cps: np.ndarray
    sampled_counts: np.ndarray
    dwell_s: float
    vbg_centers_nm: np.ndarray
    seed: int
    pump_power_mw: float
    noise_rate_cps: float


def expected_rates(spectrum, kernel, noise_model, pump_power_mw):
    """Noise-floor-added expected count rate per scan point (no sampling)."""
    dens = spectrum.interpolated(kernel.signal_grid_nm)
    weights = np.gradient(kernel.signal_grid_nm)
    rates = kernel.matrix @ (dens.values * weights)
    return rates + noise_model.rate(pump_power_mw)


def forward_scan(spectrum, kernel, noise_model, plan, sample=True):
    """Run the forward model: expected rates plus per-point Poisson counts.

    Sampling uses one child RNG stream per scan point, split from the plan
    seed by point index, so counts are independent of evaluation order and
    reproducible point-by-point.
    """
    if spectrum.unit != "w_per_nm":
        raise DomainError("forward_scan expects a spectral density in w_per_nm")
    if plan.pump_power_mw != kernel.pump_power_mw:
        raise DomainError(
            f"plan power {plan.pump_power_mw} mW differs from the kernel's "
            f"{kernel.pump_power_mw} mW; rebuild the kernel"
        )
    rates = expected_rates(spectrum, kernel, noise_model, plan.pump_power_mw)
    counts = np.zeros(rates.size, dtype=np.int64)
    if sample:
        for i in range(rates.size):
            rng = rng_from_path(plan.seed, (i,))
            counts[i] = sample_poisson(rates[i] * plan.dwell_s, rng)
    return ScanResult(
        pump_grid_nm=kernel.pump_grid_nm,
        signal_nm_mapped=kernel.mapped_signal_nm,
        expected_rate_cps=rates,
        sampled_counts=counts,
        dwell_s=plan.dwell_s,
        vbg_centers_nm=kernel.vbg_centers_nm,
        seed=plan.seed,
        pump_power_mw=plan.pump_power_mw,
        noise_rate_cps=float(noise_model.rate(plan.pump_power_mw)),
    )


@dataclass(frozen=True)
class ResolutionReport:
    analytic_fwhm_nm: float
    numeric_fwhm_nm: float
    signal_nm: float
    sfg_nm: float
    vbg_fwhm_nm: float
    note: str = ""


def _fwhm_interp(x, y):
    """FWHM of a single-peaked curve by linear interpolation at half max."""
    i = int(np.argmax(y))
    half = y[i] / 2.0
    left = right = None
    for k in range(i, 0, -1):
        if y[k - 1] < half <= y[k]:
            f = (half - y[k - 1]) / (y[k] - y[k - 1])
            left = x[k - 1] + f * (x[k] - x[k - 1])
            break
    for k in range(i, y.size - 1):
        if y[k + 1] < half <= y[k]:
            f = (y[k] - half) / (y[k] - y[k + 1])
            right = x[k] + f * (x[k + 1] - x[k])
            break
    if left is None or right is None:
        raise DomainError("half-maximum not bracketed; curve is not single-peaked here")
    return float(abs(right - left))


def resolution(kernel, vbg, signal_nm=None):
    """Signal-band resolution, analytic and numeric, at one signal wavelength.

    Analytic: the VBG linewidth mapped from the SFG band back to the signal
    band at fixed pump, fwhm_s = fwhm_vbg * (lambda_s / lambda_sfg)^2.
    Numeric: FWHM of the kernel column nearest signal_nm -- the measured
    response to a monochromatic input as the pump scans -- on the mapped
    signal axis.  The numeric width also feels the QPM acceptance, so it
    reads slightly below the analytic value.
    """
    mapped = kernel.mapped_signal_nm
    if signal_nm is None:
        signal_nm = float(mapped[mapped.size // 2])
    i_row = int(np.argmin(np.abs(mapped - signal_nm)))
    pump_nm = float(kernel.pump_grid_nm[i_row])
    sfg_nm = dispersion.sfg_wavelength(float(mapped[i_row]), pump_nm)
    analytic = vbg.fwhm_nm * (signal_nm / sfg_nm) ** 2

    j = int(np.argmin(np.abs(kernel.signal_grid_nm - signal_nm)))
    column = kernel.matrix[:, j]
    order = np.argsort(mapped)
    numeric = _fwhm_interp(mapped[order], column[order])
    note = ""
    if kernel.vbg_tracking != "tracked":
        note = ("fixed-VBG kernel: resolution is position-dependent; values "
                "quoted at the scan point nearest the requested wavelength")
    return ResolutionReport(
        analytic_fwhm_nm=float(analytic), numeric_fwhm_nm=float(numeric),
        signal_nm=float(signal_nm), sfg_nm=float(sfg_nm),
        vbg_fwhm_nm=vbg.fwhm_nm, note=note,
    )
