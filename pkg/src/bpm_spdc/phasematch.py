"""Degenerate type-1 phase matching: mismatch, solvers, thermal tuning, SHG.

Conventions
-----------
- Type-1 process: the pump propagates on the angle-resolved extraordinary
  branch, both daughters on the ordinary branch (e -> o + o).
- Wavevector mismatch for pump/signal/idler wavelengths (nm):

      delta_k = 2*pi * (n_o(ls)/ls + n_o(li)/li - n_e(theta; lp)/lp) * 1e6

  in rad/mm (the 1e6 converts per-nm to per-mm).
- Degenerate solving finds the pump root of
  f(lp) = n_e(theta; lp) - n_o(2*lp); the wavelength search uses a coarse
  sign-change scan refined by Brent's method (bisection plus inverse
  quadratic interpolation), which converges on tabulated branches where no
  analytic derivative exists. The angle solve inverts the index-ellipsoid
  relation algebraically (it is exactly invertible in sin^2 theta) and then
  verifies the same residual contract as the bracketing path.
- The default pump search range is [lambda_min, lambda_max/2] so both the
  pump and the degenerate daughters stay inside the material range.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .dispersion import (
    MaterialDispersion,
    index_extraordinary_at_angle,
    index_extraordinary_principal,
    index_ordinary,
    validate_angle,
)

# |f| below which the whole scan is treated as identically zero (degenerate).
DEGENERATE_INDEX_TOL = 1e-12
# Residual contract on the index mismatch at a returned root.
ROOT_INDEX_TOL = 1e-10
ENERGY_REL_TOL = 1e-9
DEFAULT_SCAN_POINTS = 1024


class PhaseMatchError(ValueError):
    """Base class for solver failures."""


class NoCrossingError(PhaseMatchError):
    """The mismatch keeps one sign over the whole search range."""

    def __init__(self, message: str, sign: int, extra: str = ""):
        self.sign = sign
        super().__init__(message + (f"; {extra}" if extra else ""))


class MultipleRootsError(PhaseMatchError):
    """More than one sign change (or a degenerate everywhere-zero mismatch)."""

    def __init__(self, message: str, brackets: list[tuple[float, float]]):
        self.brackets = brackets
        super().__init__(message)


class NonlinearTuningWarning(UserWarning):
    """Finite-difference tuning step shows >10% curvature over the step."""


@dataclass(frozen=True)
class WaveguideConfig:
    """Immutable waveguide description used by every solver in this module.

    ``geometry`` (cross-section metadata such as top width or etch depth) is
    carried for provenance only and never enters any computation.
    """

    material: MaterialDispersion
    theta_deg: float
    length_mm: float
    temperature_K: float
    geometry: dict | None = None

    def __post_init__(self):
        validate_angle(self.theta_deg)
        if not self.length_mm > 0:
            raise PhaseMatchError(f"waveguide length must be positive, got {self.length_mm!r}")
        band = 100.0
        if abs(self.temperature_K - self.material.t_ref_K) > band:
            raise PhaseMatchError(
                f"temperature {self.temperature_K} K outside the material's validated band "
                f"({self.material.t_ref_K} +- {band} K)"
            )


@dataclass(frozen=True)
class PhaseMatchSolution:
    theta_deg: float
    temperature_K: float
    lambda_p_nm: float
    lambda_s_nm: float
    lambda_i_nm: float
    residual_delta_k: float  # rad/mm
    matched_index: float

    def __post_init__(self):
        rel = abs(1.0 / self.lambda_p_nm - 1.0 / self.lambda_s_nm - 1.0 / self.lambda_i_nm) * self.lambda_p_nm
        if rel > 1e-12:
            raise PhaseMatchError("solution violates energy conservation")


@dataclass(frozen=True)
class ShgSpectrum:
    """Normalized second-harmonic response over a fundamental-wavelength grid."""

    lambdas_nm: np.ndarray
    efficiency: np.ndarray
    peak_lambda_nm: float

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.lambdas_nm.tolist(), self.efficiency.tolist()))


def delta_k(config: WaveguideConfig, lambda_p_nm: float, lambda_s_nm: float, lambda_i_nm: float) -> float:
    """Wavevector mismatch k_s + k_i - k_p in rad/mm."""
    rel = abs(1.0 / lambda_p_nm - 1.0 / lambda_s_nm - 1.0 / lambda_i_nm) * lambda_p_nm
    if rel > ENERGY_REL_TOL:
        raise PhaseMatchError(
            f"energy conservation violated: 1/{lambda_p_nm} != 1/{lambda_s_nm} + 1/{lambda_i_nm} "
            f"(relative error {rel:.3e})"
        )
    t = config.temperature_K
    n_s = index_ordinary(config.material, lambda_s_nm, t)
    n_i = index_ordinary(config.material, lambda_i_nm, t)
    n_p = index_extraordinary_at_angle(config.material, lambda_p_nm, t, config.theta_deg)
    return 2.0 * math.pi * (n_s / lambda_s_nm + n_i / lambda_i_nm - n_p / lambda_p_nm) * 1e6


def pump_index_mismatch(config: WaveguideConfig, lambda_p_nm) -> float | np.ndarray:
    """f(lp) = n_e(theta; lp) - n_o(2*lp); zero at the degenerate phase match."""
    t = config.temperature_K
    n_p = index_extraordinary_at_angle(config.material, lambda_p_nm, t, config.theta_deg)
    n_s = index_ordinary(config.material, np.multiply(lambda_p_nm, 2.0), t)
    return n_p - n_s


def _solution(config: WaveguideConfig, lambda_p: float) -> PhaseMatchSolution:
    t = config.temperature_K
    matched = index_extraordinary_at_angle(config.material, lambda_p, t, config.theta_deg)
    residual = delta_k(config, lambda_p, 2.0 * lambda_p, 2.0 * lambda_p)
    return PhaseMatchSolution(
        theta_deg=config.theta_deg,
        temperature_K=t,
        lambda_p_nm=lambda_p,
        lambda_s_nm=2.0 * lambda_p,
        lambda_i_nm=2.0 * lambda_p,
        residual_delta_k=residual,
        matched_index=float(matched),
    )


def solve_pm_wavelength(
    config: WaveguideConfig,
    lambda_min_nm: float | None = None,
    lambda_max_nm: float | None = None,
    scan_points: int = DEFAULT_SCAN_POINTS,
) -> PhaseMatchSolution:
    """Solve f(lp) = 0 for the degenerate pump wavelength at fixed theta and T.

    A ``scan_points`` grid locates sign changes; each bracket is refined with
    Brent's method to sub-1e-10 nm. Exactly one crossing must exist on the
    search range; zero or several raise NoCrossingError / MultipleRootsError.
    """
    lo = config.material.lambda_min_nm if lambda_min_nm is None else float(lambda_min_nm)
    hi = config.material.lambda_max_nm / 2.0 if lambda_max_nm is None else float(lambda_max_nm)
    if not (lo < hi):
        raise PhaseMatchError(f"empty search range [{lo}, {hi}] nm")
    if lo < config.material.lambda_min_nm or 2.0 * hi > config.material.lambda_max_nm:
        raise PhaseMatchError(
            f"search range [{lo}, {hi}] nm needs both the pump and 2*pump inside the "
            f"material range [{config.material.lambda_min_nm}, {config.material.lambda_max_nm}] nm"
        )
    if scan_points < 3:
        raise PhaseMatchError("scan_points must be >= 3")

    grid = np.linspace(lo, hi, int(scan_points))
    f = np.asarray(pump_index_mismatch(config, grid), dtype=float)

    if np.all(np.abs(f) < DEGENERATE_INDEX_TOL):
        raise MultipleRootsError(
            "mismatch is zero over the whole search range (branches identical); "
            "every wavelength is a root",
            brackets=[(lo, hi)],
        )

    brackets: list[tuple[float, float]] = []
    exact_roots = [float(grid[i]) for i in np.nonzero(f == 0.0)[0]]
    sign = np.sign(f)
    nonzero = np.nonzero(sign)[0]
    for a, b in zip(nonzero[:-1], nonzero[1:]):
        # Non-adjacent points straddle exact zeros already in exact_roots;
        # counting the sign change too would double-count that crossing.
        if b == a + 1 and sign[a] != sign[b]:
            brackets.append((float(grid[a]), float(grid[b])))

    n_roots = len(brackets) + len(exact_roots)
    if n_roots == 0:
        s = int(sign[nonzero[0]])
        side = "above" if s > 0 else "below"
        raise NoCrossingError(
            f"no phase-matching crossing on [{lo:g}, {hi:g}] nm: the extraordinary pump "
            f"index stays {side} the ordinary index at the half wavelength",
            sign=s,
            extra=f"f ranges [{f.min():.3e}, {f.max():.3e}]",
        )
    if n_roots > 1:
        all_brackets = brackets + [(r, r) for r in exact_roots]
        raise MultipleRootsError(
            f"{n_roots} crossings detected on [{lo:g}, {hi:g}] nm at brackets {all_brackets}; "
            "narrow the search range to isolate one",
            brackets=all_brackets,
        )

    if exact_roots:
        root = exact_roots[0]
    else:
        a, b = brackets[0]
        root = float(brentq(lambda x: pump_index_mismatch(config, x), a, b, xtol=1e-10, rtol=8.9e-16))
    residual_index = float(pump_index_mismatch(config, root))
    if abs(residual_index) > ROOT_INDEX_TOL:
        raise PhaseMatchError(
            f"root refinement failed: residual index mismatch {residual_index:.3e} at {root:.6f} nm"
        )
    return _solution(config, root)


def solve_pm_angle(config: WaveguideConfig, lambda_p_nm: float) -> PhaseMatchSolution:
    """Solve for the propagation angle phase-matching a given degenerate pump.

    1/n(theta)^2 is linear in sin^2(theta), so the root is obtained by exact
    algebraic inversion; the residual is verified against the same contract
    as the wavelength solver. The config's theta is ignored as an input and
    replaced in the returned solution.
    """
    lp = float(lambda_p_nm)
    t = config.temperature_K
    n_target = float(index_ordinary(config.material, 2.0 * lp, t))
    n_o = float(index_ordinary(config.material, lp, t))
    n_e = float(index_extraordinary_principal(config.material, lp, t))

    lo_n, hi_n = min(n_o, n_e), max(n_o, n_e)
    if n_e == n_o:
        if n_target == n_o:
            raise MultipleRootsError(
                "branches are degenerate at the pump wavelength; every angle is a root",
                brackets=[(0.0, 90.0)],
            )
        raise NoCrossingError(
            f"target index {n_target:.6f} unreachable: branches are degenerate at "
            f"n = {n_o:.6f} for this pump",
            sign=1 if n_o > n_target else -1,
        )
    if not (lo_n <= n_target <= hi_n):
        sign = 1 if lo_n > n_target else -1
        raise NoCrossingError(
            f"target index {n_target:.6f} outside the achievable interval "
            f"[{lo_n:.6f}, {hi_n:.6f}] at pump {lp:g} nm",
            sign=sign,
        )

    s2 = (1.0 / n_target**2 - 1.0 / n_o**2) / (1.0 / n_e**2 - 1.0 / n_o**2)
    s2 = min(max(s2, 0.0), 1.0)
    theta = math.degrees(math.asin(math.sqrt(s2)))
    solved = dataclasses.replace(config, theta_deg=theta)
    residual_index = float(pump_index_mismatch(solved, lp))
    if abs(residual_index) > ROOT_INDEX_TOL:
        raise PhaseMatchError(
            f"angle inversion failed: residual index mismatch {residual_index:.3e} at {theta:.6f} deg"
        )
    return _solution(solved, lp)


def tuning_rate(
    config: WaveguideConfig,
    delta_T: float = 1.0,
    lambda_min_nm: float | None = None,
    lambda_max_nm: float | None = None,
) -> float:
    """Thermal tuning rate of the degenerate first-harmonic wavelength, nm/K.

    Central finite difference of 2*lambda_p over [T - delta_T, T + delta_T]
    (the factor 2 reports the daughter/FH axis). Warns with
    NonlinearTuningWarning when the second difference exceeds 10% of the
    first-difference step, indicating the step is too large for a linear fit.
    """
    if not delta_T > 0:
        raise PhaseMatchError("delta_T must be positive")

    def root_at(t: float) -> float:
        cfg = dataclasses.replace(config, temperature_K=t)
        return solve_pm_wavelength(cfg, lambda_min_nm, lambda_max_nm).lambda_p_nm

    lam_minus = root_at(config.temperature_K - delta_T)
    lam_zero = root_at(config.temperature_K)
    lam_plus = root_at(config.temperature_K + delta_T)

    first = (lam_plus - lam_minus) / 2.0
    second = lam_plus - 2.0 * lam_zero + lam_minus
    if first != 0.0 and abs(second) > 0.1 * abs(first):
        warnings.warn(
            f"tuning response is nonlinear over +-{delta_T} K "
            f"(second difference {second:.3g} nm vs step {first:.3g} nm); "
            "reduce delta_T for a trustworthy slope",
            NonlinearTuningWarning,
            stacklevel=2,
        )
    return 2.0 * first / delta_T


def shg_spectrum(config: WaveguideConfig, lambda_grid_nm) -> ShgSpectrum:
    """Normalized sinc^2 second-harmonic spectrum over a fundamental grid.

    efficiency(l) = sinc^2(delta_k(l/2, l, l) * L / 2), scaled so the grid
    maximum is exactly 1. Assumes an undepleted pump and a uniform waveguide.
    """
    grid = np.asarray(lambda_grid_nm, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise PhaseMatchError("wavelength grid must be a non-empty 1-D sequence")
    if grid.size > 1 and not np.all(np.diff(grid) > 0):
        raise PhaseMatchError("wavelength grid must be strictly increasing")
    config.material.check_range(grid)
    config.material.check_range(grid / 2.0)

    t = config.temperature_K
    n_fh = index_ordinary(config.material, grid, t)
    n_pump = index_extraordinary_at_angle(config.material, grid / 2.0, t, config.theta_deg)
    dk = 2.0 * math.pi * (2.0 * n_fh / grid - 2.0 * n_pump / grid) * 1e6  # rad/mm
    x = dk * config.length_mm / 2.0
    eff = np.square(np.sinc(x / math.pi))  # np.sinc(y) = sin(pi y)/(pi y)
    peak = int(np.argmax(eff))
    eff = eff / eff[peak]
    return ShgSpectrum(lambdas_nm=grid, efficiency=eff, peak_lambda_nm=float(grid[peak]))
