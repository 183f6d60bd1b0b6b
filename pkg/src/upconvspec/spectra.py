"""Spectral-density containers and synthetic test spectra."""
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .units import dbm_to_watts

UNIT_TAGS = ("w_per_nm", "counts_per_s", "photons_per_s_per_nm", "dimensionless")


@dataclass(frozen=True)
class Spectrum:
    """Values on an ascending wavelength grid, tagged with their unit.

    grid_nm strictly ascending; values nonnegative.  Input spectra are
    spectral densities (w_per_nm); scan outputs are rates (counts_per_s).
    """

    grid_nm: np.ndarray
    values: np.ndarray
    unit: str = "w_per_nm"

    def __post_init__(self):
        grid = np.asarray(self.grid_nm, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != vals.shape or grid.size < 1:
            raise DomainError("spectrum grid and values must be matching 1-D arrays")
        if grid.size > 1 and np.any(np.diff(grid) <= 0):
            raise DomainError("spectrum grid must be strictly ascending")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise DomainError("spectrum values must be finite and nonnegative")
        if self.unit not in UNIT_TAGS:
            raise DomainError(f"unknown spectrum unit tag {self.unit!r}")
        object.__setattr__(self, "grid_nm", grid)
        object.__setattr__(self, "values", vals)

    def total_power_w(self):
        """Trapezoid integral; meaningful for w_per_nm spectra."""
        if self.grid_nm.size == 1:
            return float(self.values[0])
        return float(np.trapezoid(self.values, self.grid_nm))

    def interpolated(self, grid_nm):
        """Linear resample onto a new ascending grid, zero outside support."""
        new = np.asarray(grid_nm, dtype=float)
        vals = np.interp(new, self.grid_nm, self.values, left=0.0, right=0.0)
        return Spectrum(grid_nm=new, values=vals, unit=self.unit)

    def scaled(self, factor):
        if factor < 0:
            raise DomainError("scale factor must be nonnegative")
        return Spectrum(self.grid_nm, self.values * factor, self.unit)


def multimode_ld_spectrum(grid_nm, center_nm=1550.0, n_modes=5, spacing_nm=0.5,
                          mode_fwhm_nm=0.35, total_dbm=-98.9, envelope_fwhm_nm=None):
    """Comb of gaussian longitudinal modes mimicking a Fabry-Perot diode.

    Modes sit at center ± k*spacing; an optional gaussian envelope shapes
    relative mode powers.  The result integrates to total_dbm exactly.
    """
    if n_modes < 1 or spacing_nm <= 0 or mode_fwhm_nm <= 0:
        raise DomainError("need n_modes >= 1 and positive spacing/mode width")
    grid = np.asarray(grid_nm, dtype=float)
    offsets = (np.arange(n_modes) - (n_modes - 1) / 2.0) * spacing_nm
    centers = center_nm + offsets
    weights = np.ones(n_modes)
    if envelope_fwhm_nm is not None:
        weights = np.exp(-4.0 * np.log(2.0) * (offsets / envelope_fwhm_nm) ** 2)
    sigma = mode_fwhm_nm / (2.0 * np.sqrt(2.0 * np.log(2.0)))
    vals = np.zeros_like(grid)
    for c, w in zip(centers, weights):
        vals += w * np.exp(-0.5 * ((grid - c) / sigma) ** 2)
    integral = np.trapezoid(vals, grid)
    if integral <= 0:
        raise DomainError("spectrum grid does not cover the requested modes")
    vals *= dbm_to_watts(total_dbm) / integral
    return Spectrum(grid_nm=grid, values=vals, unit="w_per_nm")


def monochromatic_spectrum(grid_nm, line_nm, power_w):
    """All the power in the single grid bin nearest line_nm (delta input).

    The bin value is power / local bin width so the trapezoid integral of
    the density equals power_w.
    """
    grid = np.asarray(grid_nm, dtype=float)
    if grid.size < 3:
        raise DomainError("need at least 3 grid points for a delta input")
    if not (grid[0] <= line_nm <= grid[-1]):
        raise DomainError(f"line {line_nm} nm outside the grid")
    j = int(np.argmin(np.abs(grid - line_nm)))
    widths = np.gradient(grid)
    vals = np.zeros_like(grid)
    vals[j] = power_w / widths[j]
    return Spectrum(grid_nm=grid, values=vals, unit="w_per_nm")
