"""Post-waveguide optical filter chain and the single-photon detector spec.

The chain isolates the upconverted (~860 nm) light from pump harmonics and
parasitic upconversion: a short-pass edge filter, a band-pass filter, an
angle-tunable volume Bragg grating (VBG) used as the narrow spectral gate,
plus flat broadband losses (dichroics, WDM ports, coupling).  Transmission
models are simple analytic lineshapes; absolute throughput is deliberately
left to the lumped end-to-end efficiency calibration (see conversion module),
so only the spectral *shape* of the chain matters downstream.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import erf, erfc

from .errors import DomainError

LN2_4 = 4.0 * np.log(2.0)


@dataclass(frozen=True)
class FilterElement:
    """One fixed filter in the chain.

    kind: "band_pass" | "short_pass" | "long_pass" | "broadband_loss"
    Band-pass filters use a gaussian or an erf-edged top-hat lineshape of
    width fwhm_nm around center_nm.  Edge filters roll off over
    edge_width_nm (erf transition scale) at edge_nm.  Broadband loss is a
    wavelength-independent transmission equal to peak.
    """

    kind: str
    center_nm: float = 0.0
    edge_nm: float = 0.0
    fwhm_nm: float = 0.0
    peak: float = 1.0
    edge_width_nm: float = 1.0
    lineshape: str = "gaussian"
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("band_pass", "short_pass", "long_pass", "broadband_loss"):
            raise DomainError(f"unknown filter kind {self.kind!r}")
        if not (0.0 <= self.peak <= 1.0):
            raise DomainError(f"filter peak transmission {self.peak} outside [0, 1]")
        if self.kind == "band_pass":
            if self.center_nm <= 0 or self.fwhm_nm <= 0:
                raise DomainError("band_pass needs positive center_nm and fwhm_nm")
            if self.lineshape not in ("gaussian", "top_hat"):
                raise DomainError(f"unknown band_pass lineshape {self.lineshape!r}")
        if self.kind in ("short_pass", "long_pass"):
            if self.edge_nm <= 0 or self.edge_width_nm <= 0:
                raise DomainError("edge filters need positive edge_nm and edge_width_nm")


@dataclass(frozen=True)
class VbgState:
    """Angle-tunable volume Bragg grating used as the narrow SFG-band gate.

    Reflection line modeled as a gaussian of the stated FWHM by default;
    "top_hat" switches to an erf-edged flat top (edge scale FWHM/10) for
    sensitivity checks -- the published numbers give only FWHM and peak,
    not a shape.
    """

    center_setpoint_nm: float = 863.57
    fwhm_nm: float = 0.05
    peak_reflectance: float = 0.95
    tuning_range_nm: tuple = (850.0, 880.0)
    lineshape: str = "gaussian"

    def __post_init__(self):
        lo, hi = self.tuning_range_nm
        if not (lo < hi):
            raise DomainError("VBG tuning range must be ordered (lo, hi)")
        if not (lo <= self.center_setpoint_nm <= hi):
            raise DomainError(
                f"VBG setpoint {self.center_setpoint_nm} nm outside the "
                f"tuning range [{lo}, {hi}] nm"
            )
        if self.fwhm_nm <= 0:
            raise DomainError("VBG fwhm_nm must be positive")
        if not (0.0 < self.peak_reflectance <= 1.0):
            raise DomainError("VBG peak reflectance must be in (0, 1]")
        if self.lineshape not in ("gaussian", "top_hat"):
            raise DomainError(f"unknown VBG lineshape {self.lineshape!r}")

    def retuned(self, center_nm):
        """Same grating rotated to a new center; validates the tuning range."""
        return VbgState(center_setpoint_nm=float(center_nm), fwhm_nm=self.fwhm_nm,
                        peak_reflectance=self.peak_reflectance,
                        tuning_range_nm=self.tuning_range_nm,
                        lineshape=self.lineshape)


@dataclass(frozen=True)
class ApdSpec:
    """Silicon APD single-photon counter parameters.

    quantum_efficiency is bookkeeping only: absolute throughput lives in the
    lumped conversion-efficiency calibration.  Dead time and afterpulsing are
    carried as fields but off (zero) by default and not modeled.
    """

    dark_rate_cps: float = 25.0
    quantum_efficiency: float = 0.65
    dead_time_s: float = 0.0
    afterpulse_prob: float = 0.0

    def __post_init__(self):
        if self.dark_rate_cps < 0:
            raise DomainError("dark rate must be nonnegative")
        if not (0.0 < self.quantum_efficiency <= 1.0):
            raise DomainError("quantum efficiency must be in (0, 1]")
        if self.dead_time_s < 0 or not (0.0 <= self.afterpulse_prob < 1.0):
            raise DomainError("invalid dead time / afterpulse probability")


def gaussian_band(wavelength_nm, center_nm, fwhm_nm, peak=1.0):
    """Gaussian transmission lineshape with the given FWHM, maximum = peak."""
    x = (np.asarray(wavelength_nm, dtype=float) - center_nm) / fwhm_nm
    return peak * np.exp(-LN2_4 * x ** 2)


def transmission(element, wavelength_nm):
    """Power transmission of one FilterElement at wavelength(s) [nm]."""
    lam = np.asarray(wavelength_nm, dtype=float)
    if element.kind == "broadband_loss":
        out = np.full_like(lam, element.peak)
    elif element.kind == "band_pass":
        if element.lineshape == "gaussian":
            out = gaussian_band(lam, element.center_nm, element.fwhm_nm, element.peak)
        else:  # top_hat with erf edges
            half = element.fwhm_nm / 2.0
            w = element.edge_width_nm
            rise = 0.5 * (1.0 + erf((lam - (element.center_nm - half)) / w))
            fall = 0.5 * (1.0 + erf(((element.center_nm + half) - lam) / w))
            out = element.peak * rise * fall
    elif element.kind == "short_pass":
        out = element.peak * 0.5 * erfc((lam - element.edge_nm) / element.edge_width_nm)
    else:  # long_pass
        out = element.peak * 0.5 * erfc((element.edge_nm - lam) / element.edge_width_nm)
    return float(out) if np.ndim(wavelength_nm) == 0 else out


def vbg_transmission(vbg, wavelength_nm, center_nm=None):
    """Reflection-path transmission of the VBG (gaussian line, peak < 1).

    center_nm overrides the setpoint, for evaluating tracking schedules
    without rebuilding the VbgState; it must lie inside the tuning range.
    """
    center = vbg.center_setpoint_nm if center_nm is None else center_nm
    lo, hi = vbg.tuning_range_nm
    c_arr = np.asarray(center, dtype=float)
    if np.any(c_arr < lo) or np.any(c_arr > hi):
        bad = c_arr if c_arr.ndim == 0 else c_arr[(c_arr < lo) | (c_arr > hi)][0]
        raise DomainError(
            f"VBG center {float(bad):.3f} nm outside the tuning range [{lo}, {hi}] nm"
        )
    if vbg.lineshape == "gaussian":
        out = gaussian_band(wavelength_nm, c_arr, vbg.fwhm_nm, vbg.peak_reflectance)
    else:
        lam = np.asarray(wavelength_nm, dtype=float)
        half = vbg.fwhm_nm / 2.0
        w = vbg.fwhm_nm / 10.0
        rise = 0.5 * (1.0 + erf((lam - (c_arr - half)) / w))
        fall = 0.5 * (1.0 + erf(((c_arr + half) - lam) / w))
        out = vbg.peak_reflectance * rise * fall
    return float(out) if np.ndim(wavelength_nm) == 0 and np.ndim(center) == 0 else out


def chain_transmission(elements, wavelength_nm):
    """Product transmission of a list of FilterElement / VbgState objects."""
    lam = np.asarray(wavelength_nm, dtype=float)
    out = np.ones_like(lam)
    for el in elements:
        if isinstance(el, VbgState):
            out = out * vbg_transmission(el, lam)
        else:
            out = out * transmission(el, lam)
    return float(out) if np.ndim(wavelength_nm) == 0 else out
