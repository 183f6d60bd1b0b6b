"""Pump-power dependence of conversion efficiency and parasitic noise.

Conversion follows the undepleted-signal SFG solution eta(P) =
eta_max * sin^2(u * sqrt(P)): efficiency rises with pump power, saturates,
and would roll over past the first sin^2 maximum.  Parasitic counts (pump
SHG/THG leakage, spontaneous Raman scattering upconverted in-band) grow
super-linearly and are modeled as a power law on top of the intrinsic dark
rate, D(P) = D0 + a * P^gamma.

Both models can be pinned from measured (power, value) pairs:

* two points -> exact closed-form / 1-D root solve, which is how the
  deployed instrument is characterized;
* three or more points -> least-squares fit (scipy), with a FitReport
  carrying residuals so an overdetermined characterization that the model
  cannot reproduce is visible instead of silently averaged away.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .errors import DomainError, FitError


@dataclass(frozen=True)
class PumpState:
    """Pump laser operating point (CW, ~1.9-2.0 um band)."""

    power_mw: float = 30.0
    wavelength_nm: float = 1950.0
    max_power_mw: float = 800.0

    def __post_init__(self):
        if not (0.0 <= self.power_mw <= self.max_power_mw):
            raise DomainError(
                f"pump power {self.power_mw} mW outside [0, {self.max_power_mw}] mW"
            )
        if self.wavelength_nm <= 0:
            raise DomainError("pump wavelength must be positive")


@dataclass(frozen=True)
class ConversionModel:
    """eta(P) = eta_max * sin^2(u * sqrt(P)), P in mW.

    u has units 1/sqrt(mW).  eta_max is the lumped end-to-end detection
    efficiency at the sin^2 maximum: it already contains waveguide coupling,
    filter-chain throughput and detector quantum efficiency, because it is
    pinned from measured system efficiencies.
    """

    eta_max: float
    u_per_sqrt_mw: float

    def __post_init__(self):
        if not (0.0 < self.eta_max <= 1.0):
            raise DomainError(f"eta_max {self.eta_max} outside (0, 1]")
        if self.u_per_sqrt_mw <= 0:
            raise DomainError("u must be positive")

    def efficiency(self, power_mw):
        p = np.asarray(power_mw, dtype=float)
        if np.any(p < 0):
            raise DomainError("pump power must be nonnegative")
        out = self.eta_max * np.sin(self.u_per_sqrt_mw * np.sqrt(p)) ** 2
        return float(out) if np.ndim(power_mw) == 0 else out

    @property
    def saturation_power_mw(self):
        """Power of the first sin^2 maximum (monotone below this)."""
        return (np.pi / (2.0 * self.u_per_sqrt_mw)) ** 2


@dataclass(frozen=True)
class NoiseModel:
    """Detector counts with no signal input: D(P) = floor + a * P^gamma [cps]."""

    floor_cps: float
    amplitude_cps: float
    exponent: float

    def __post_init__(self):
        if self.floor_cps < 0 or self.amplitude_cps < 0:
            raise DomainError("noise floor and amplitude must be nonnegative")
        if self.exponent <= 0:
            raise DomainError("noise exponent must be positive")

    def rate(self, power_mw):
        p = np.asarray(power_mw, dtype=float)
        if np.any(p < 0):
            raise DomainError("pump power must be nonnegative")
        out = self.floor_cps + self.amplitude_cps * p ** self.exponent
        return float(out) if np.ndim(power_mw) == 0 else out


@dataclass
class FitReport:
    """What a model pin/fit actually achieved on the supplied points."""

    residuals: np.ndarray
    rms: float
    degenerate: bool = False
    note: str = ""


def _as_points(points, what):
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise FitError(f"{what}: need at least two (power_mw, value) pairs")
    if np.any(pts[:, 0] < 0):
        raise FitError(f"{what}: negative pump power in calibration points")
    if len(np.unique(pts[:, 0])) != len(pts):
        raise FitError(f"{what}: duplicate pump powers in calibration points")
    return pts[np.argsort(pts[:, 0])]


def fit_conversion(points):
    """Pin ConversionModel to measured (power_mw, efficiency) pairs.

    Two points: solve sin^2 ratio equation for u by bisection (the ratio
    g(u) = eta2*sin^2(u sqrt(P1)) - eta1*sin^2(u sqrt(P2)) has exactly one
    root in (0, pi/(2 sqrt(Pmax))) when the points are consistent with a
    monotone saturating curve), then eta_max from either point.
    More points: least-squares over (eta_max, u).
    Returns (model, FitReport).
    """
    pts = _as_points(points, "conversion fit")
    if np.any(pts[:, 1] <= 0) or np.any(pts[:, 1] > 1):
        raise FitError("conversion fit: efficiencies must be in (0, 1]")
    if np.any(pts[:, 0] == 0):
        raise FitError("conversion fit: zero pump power carries no information")
    p, eta = pts[:, 0], pts[:, 1]

    if len(pts) == 2:
        p1, p2 = p
        e1, e2 = eta

        def g(u):
            return e2 * np.sin(u * np.sqrt(p1)) ** 2 - e1 * np.sin(u * np.sqrt(p2)) ** 2

        hi = np.pi / (2.0 * np.sqrt(p2))  # keep both points on the rising branch
        # g(0+) -> u^2 (e2 p1 - e1 p2): sign tells which way the curve bends.
        lo = hi * 1e-9
        if g(lo) == 0.0:
            # e1/e2 == p1/p2 exactly: the small-signal (linear) limit, u -> 0
            # is the only solution; treat as degenerate and pin the slope.
            u = lo
        else:
            glo, ghi = g(lo), g(hi)
            if glo * ghi > 0:
                raise FitError(
                    "conversion fit: points are inconsistent with a saturating "
                    "sin^2 curve on the monotone branch"
                )
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if g(mid) * glo <= 0:
                    hi = mid
                else:
                    lo, glo = mid, g(mid)
            u = 0.5 * (lo + hi)
        eta_max = float(e2 / np.sin(u * np.sqrt(p2)) ** 2)
        if eta_max > 1.0 + 1e-9:
            raise FitError(
                f"conversion fit: implied eta_max {eta_max:.3f} exceeds 1; "
                "measured efficiencies are not consistent with the model"
            )
        model = ConversionModel(eta_max=min(eta_max, 1.0), u_per_sqrt_mw=float(u))
        res = model.efficiency(p) - eta
        return model, FitReport(residuals=res, rms=float(np.sqrt(np.mean(res ** 2))))

    # Overdetermined: least-squares in (eta_max, u), seeded from the two
    # extreme points via the exact two-point solve.
    seed, _ = fit_conversion([pts[0], pts[-1]])

    def resid(x):
        em, u = x
        return em * np.sin(u * np.sqrt(p)) ** 2 - eta

    sol = least_squares(resid, x0=[seed.eta_max, seed.u_per_sqrt_mw],
                        bounds=([1e-6, 1e-9], [1.0, np.pi / (2 * np.sqrt(p.max()))]))
    if not sol.success:
        raise FitError(f"conversion fit failed: {sol.message}")
    model = ConversionModel(eta_max=float(sol.x[0]), u_per_sqrt_mw=float(sol.x[1]))
    res = model.efficiency(p) - eta
    rms = float(np.sqrt(np.mean(res ** 2)))
    degenerate = rms > 0.02 * float(np.max(eta))
    note = "residuals exceed 2% of peak efficiency" if degenerate else ""
    return model, FitReport(residuals=res, rms=rms, degenerate=degenerate, note=note)


def fit_noise(points, floor_cps):
    """Pin NoiseModel to measured (power_mw, total_cps) pairs above a known floor.

    The intrinsic detector floor is pinned (measured with the pump off), so
    two points determine the power law exactly:
        gamma = ln(r2/r1) / ln(p2/p1),  a = r1 / p1^gamma
    with r_i the floor-subtracted rates.  More points: least-squares over
    (ln a, gamma) on floor-subtracted rates.  Returns (model, FitReport).
    """
    if floor_cps < 0:
        raise FitError("noise fit: floor must be nonnegative")
    pts = _as_points(points, "noise fit")
    p, tot = pts[:, 0], pts[:, 1]
    if np.any(p == 0):
        raise FitError("noise fit: zero-power point belongs in the floor, not here")
    excess = tot - floor_cps
    if np.any(excess <= 0):
        raise FitError(
            "noise fit: some points do not exceed the stated floor; "
            "check floor_cps against the pump-off measurement"
        )

    if len(pts) == 2:
        gamma = float(np.log(excess[1] / excess[0]) / np.log(p[1] / p[0]))
        if gamma <= 0:
            raise FitError(
                f"noise fit: implied exponent {gamma:.3f} is not positive; "
                "pump-induced counts must grow with power"
            )
        a = float(excess[0] / p[0] ** gamma)
        model = NoiseModel(floor_cps=float(floor_cps), amplitude_cps=a, exponent=gamma)
        res = model.rate(p) - tot
        return model, FitReport(residuals=res, rms=float(np.sqrt(np.mean(res ** 2))))

    seed, _ = fit_noise([pts[0], pts[-1]], floor_cps)

    def resid(x):
        ln_a, gamma = x
        return np.exp(ln_a) * p ** gamma - excess

    sol = least_squares(resid, x0=[np.log(seed.amplitude_cps), seed.exponent],
                        bounds=([-50.0, 1e-3], [50.0, 10.0]))
    if not sol.success:
        raise FitError(f"noise fit failed: {sol.message}")
    model = NoiseModel(floor_cps=float(floor_cps),
                       amplitude_cps=float(np.exp(sol.x[0])),
                       exponent=float(sol.x[1]))
    res = model.rate(p) - tot
    rms = float(np.sqrt(np.mean(res ** 2)))
    degenerate = rms > 0.05 * float(np.max(excess))
    note = "power law cannot reproduce all points to 5%" if degenerate else ""
    return model, FitReport(residuals=res, rms=rms, degenerate=degenerate, note=note)
