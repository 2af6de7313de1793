"""Estimators turning raw count rates into pair-source figures of merit.

Splitter conventions (read this first)
--------------------------------------
Two estimators carry an apparatus-dependent splitting factor, both expressed
through the probability that the relevant photons end up on distinct
detectors:

- ``pgr`` (pair generation rate): PGR = sep * C_s * C_i / C_si, where ``sep``
  is the probability that a generated pair produces one detection opportunity
  in the signal arm and one in the idler arm. A degenerate source whose pair
  is separated by a beam splitter with ratio rho has sep = 2*rho*(1 - rho)
  (0.5 for 50:50, giving the classic C_s*C_i / (2*C_si)); an apparatus that
  separates pairs deterministically (distinct wavelengths/polarizations, or
  the event simulator in this package, which routes signal and idler photons
  to distinct channels by construction) has sep = 1. The default 0.5 keeps
  the conventional 50:50 formula; analyses of simulated streams should pass
  ``pair_separation_prob=1.0`` so the estimator is unbiased for the true pair
  rate. Equivalently, the denominator factor 2 generalizes to
  1/(2*rho*(1-rho)).

- ``g2h_zero`` (heralded autocorrelation): the denominator factor 2 in
  C_si1i2*C_s / (2*C_si1*C_si2) likewise generalizes to 1/(2*rho*(1-rho))
  for an idler-arm splitter with ratio rho.

Uncertainties use first-order (delta-method) propagation of independent
Poisson counting errors; covariances between singles and coincidences are
neglected. Every sigma therefore shrinks as 1/sqrt(duration).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class PhotonStatsError(ValueError):
    """Base class for estimator errors."""


class UndefinedEstimateError(PhotonStatsError):
    """An estimator's denominator counts are zero; the estimate is undefined."""


class InconsistentCountsError(PhotonStatsError):
    """Counts contradict the stated detector efficiency."""


@dataclass(frozen=True)
class CountRates:
    """Measured (or predicted) rates in Hz over a given integration duration.

    ``c_si`` is the signal/merged-idler pair coincidence rate within the
    window; ``c_si1``/``c_si2`` count heralds with at least one event on the
    respective idler detector and ``c_si1i2`` heralds with at least one event
    on each.
    """

    c_s: float
    c_i: float
    c_si: float
    c_si1: float = 0.0
    c_si2: float = 0.0
    c_si1i2: float = 0.0
    duration_s: float = 1.0
    window_s: float = 1e-9

    def __post_init__(self):
        for name in ("c_s", "c_i", "c_si", "c_si1", "c_si2", "c_si1i2"):
            if getattr(self, name) < 0:
                raise PhotonStatsError(f"count rate {name} must be non-negative")
        if self.duration_s <= 0:
            raise PhotonStatsError("duration must be positive")
        if self.window_s <= 0:
            raise PhotonStatsError("coincidence window must be positive")
        if self.c_si > min(self.c_s, self.c_i) * (1.0 + 1e-12):
            raise PhotonStatsError(
                f"coincidence rate {self.c_si:g} Hz exceeds the smaller singles rate "
                f"{min(self.c_s, self.c_i):g} Hz"
            )

    def counts(self, name: str) -> float:
        """Integrated number of events behind a rate field."""
        return getattr(self, name) * self.duration_s


@dataclass(frozen=True)
class LossBudget:
    """Per-arm losses in dB plus per-detector efficiencies.

    The on-chip part is shared by both arms; each arm's total loss is
    on_chip_db + its off-chip part.
    """

    on_chip_db: float = 0.0
    off_chip_signal_db: float = 0.0
    off_chip_idler_db: float = 0.0
    det_eff_signal: float = 1.0
    det_eff_idler1: float = 1.0
    det_eff_idler2: float = 1.0

    def __post_init__(self):
        for name in ("on_chip_db", "off_chip_signal_db", "off_chip_idler_db"):
            if getattr(self, name) < 0:
                raise PhotonStatsError(f"{name} must be >= 0 dB")
        for name in ("det_eff_signal", "det_eff_idler1", "det_eff_idler2"):
            v = getattr(self, name)
            if not (0.0 < v <= 1.0):
                raise PhotonStatsError(f"{name} must be in (0, 1], got {v!r}")

    @property
    def signal_arm_db(self) -> float:
        return self.on_chip_db + self.off_chip_signal_db

    @property
    def idler_arm_db(self) -> float:
        return self.on_chip_db + self.off_chip_idler_db

    @property
    def signal_transmittance(self) -> float:
        return heralding_efficiency_from_loss(self.signal_arm_db)

    @property
    def idler_transmittance(self) -> float:
        return heralding_efficiency_from_loss(self.idler_arm_db)


def fbs_pair_separation_prob(splitter_ratio: float) -> float:
    """Probability a photon pair is split one-per-port by a rho:(1-rho) splitter."""
    rho = float(splitter_ratio)
    if not (0.0 < rho < 1.0):
        raise PhotonStatsError(f"splitter ratio must be in (0, 1), got {rho!r}")
    return 2.0 * rho * (1.0 - rho)


def pgr(
    c: CountRates,
    *,
    splitter_ratio: float = 0.5,
    pair_separation_prob: float | None = None,
) -> float:
    """Pair generation rate estimate sep * C_s * C_i / C_si (see module docstring).

    By default sep = 2*rho*(1-rho) with rho = ``splitter_ratio`` (0.5 gives
    the conventional factor-2 denominator). Pass ``pair_separation_prob=1.0``
    for apparatuses that separate pairs deterministically.
    """
    sep = fbs_pair_separation_prob(splitter_ratio) if pair_separation_prob is None else float(pair_separation_prob)
    if not (0.0 < sep <= 1.0):
        raise PhotonStatsError(f"pair separation probability must be in (0, 1], got {sep!r}")
    if c.c_si <= 0.0:
        raise UndefinedEstimateError("pair rate estimate undefined: no coincidences recorded")
    return sep * c.c_s * c.c_i / c.c_si


def pgr_sigma(c: CountRates, value: float) -> float:
    """Delta-method one-standard-deviation error of a pgr() estimate."""
    n_s, n_i, n_si = c.counts("c_s"), c.counts("c_i"), c.counts("c_si")
    if min(n_s, n_i, n_si) <= 0:
        return float("nan")
    return value * math.sqrt(1.0 / n_s + 1.0 / n_i + 1.0 / n_si)


@dataclass(frozen=True)
class CarResult:
    car: float
    sigma: float
    is_lower_bound: bool
    peak_delay_ps: int
    peak_counts: int
    baseline_mean: float
    n_baseline_bins: int


def car_from_histogram(
    hist,
    *,
    window_s: float | None = None,
    exclusion_half_widths: float = 5.0,
) -> CarResult:
    """Coincidence-to-accidental ratio max_bin / baseline_mean - 1.

    ``hist`` is any object with ``counts``, ``delays_ps`` and ``bin_width_s``
    attributes. The baseline is the mean of bins whose center delay exceeds
    ``exclusion_half_widths`` times the coincidence window (default five
    window widths; the window defaults to the bin width). A zero-count
    baseline yields a lower bound (computed as if one baseline count had been
    seen) with ``is_lower_bound`` set and sigma equal to the bound itself.
    """
    counts = np.asarray(hist.counts, dtype=np.int64)
    delays = np.asarray(hist.delays_ps, dtype=np.int64)
    if counts.size == 0:
        raise PhotonStatsError("empty histogram")
    window_ps = (hist.bin_width_s if window_s is None else window_s) * 1e12
    baseline_mask = np.abs(delays) > exclusion_half_widths * window_ps
    n_base = int(np.count_nonzero(baseline_mask))
    if n_base < 10:
        raise PhotonStatsError(
            f"need at least 10 baseline bins beyond {exclusion_half_widths:g} window widths, "
            f"got {n_base}; enlarge the histogram span"
        )
    peak_idx = int(np.argmax(counts))
    peak = int(counts[peak_idx])
    if peak == 0:
        raise UndefinedEstimateError("histogram has no counts")
    base_total = int(counts[baseline_mask].sum())

    if base_total == 0:
        base_mean = 1.0 / n_base
        car = peak / base_mean - 1.0
        return CarResult(car, car, True, int(delays[peak_idx]), peak, 0.0, n_base)

    base_mean = base_total / n_base
    car = peak / base_mean - 1.0
    sigma = (car + 1.0) * math.sqrt(1.0 / peak + 1.0 / base_total)
    return CarResult(car, sigma, False, int(delays[peak_idx]), peak, base_mean, n_base)


def heralding_efficiency_from_loss(loss_db: float) -> float:
    """Transmittance 10^(-dB/10) of a lossy path."""
    if loss_db < 0:
        raise PhotonStatsError(f"loss must be >= 0 dB, got {loss_db!r}")
    return 10.0 ** (-loss_db / 10.0)


def heralding_efficiency_from_counts(c: CountRates, eta_d: float = 1.0) -> float:
    """Heralded-arm efficiency C_si / (C_s * eta_d), detector efficiency divided out."""
    if not (0.0 < eta_d <= 1.0):
        raise PhotonStatsError(f"detector efficiency must be in (0, 1], got {eta_d!r}")
    if c.c_s <= 0.0:
        raise UndefinedEstimateError("heralding efficiency undefined: no herald counts")
    value = c.c_si / (c.c_s * eta_d)
    if value > 1.0 + 1e-12:
        raise InconsistentCountsError(
            f"inferred heralding efficiency {value:.4f} exceeds 1: counts contradict "
            f"the stated detector efficiency {eta_d:g}"
        )
    return value


def g2h_zero(c: CountRates, *, splitter_ratio: float = 0.5) -> tuple[float, float]:
    """Heralded zero-delay autocorrelation and its Poisson sigma.

    value = C_si1i2 * C_s / (k * C_si1 * C_si2) with k = 1/(2*rho*(1-rho)),
    the factor 2 for the default 50:50 idler splitter. When no triples were
    recorded the value is 0 and sigma is quoted at the one-triple-count scale.
    """
    k = 1.0 / fbs_pair_separation_prob(splitter_ratio)
    if c.c_si1 <= 0.0 or c.c_si2 <= 0.0:
        raise UndefinedEstimateError("g2 undefined: a heralded singles rate is zero")
    value = c.c_si1i2 * c.c_s / (k * c.c_si1 * c.c_si2)
    n_s, n_1, n_2, n_3 = (c.counts(f) for f in ("c_s", "c_si1", "c_si2", "c_si1i2"))
    base_rel = 1.0 / n_s + 1.0 / n_1 + 1.0 / n_2
    if n_3 > 0:
        sigma = value * math.sqrt(1.0 / n_3 + base_rel)
    else:
        one_triple = (1.0 / c.duration_s) * c.c_s / (k * c.c_si1 * c.c_si2)
        sigma = one_triple * math.sqrt(1.0 + base_rel)
    return value, sigma


@dataclass(frozen=True)
class FitResult:
    slope: float
    sigma: float


def brightness_fit(points) -> FitResult:
    """Least-squares slope through the origin of (pump power mW, PGR Hz) points.

    sigma is residual-based (n >= 3 points); with exactly two points it is NaN.
    """
    pts = [(float(p), float(r)) for p, r in points]
    if len(pts) < 2:
        raise PhotonStatsError("brightness fit needs at least 2 (power, rate) points")
    powers = np.array([p for p, _ in pts])
    rates = np.array([r for _, r in pts])
    if np.any(powers <= 0):
        raise PhotonStatsError("pump powers must be positive")
    if np.unique(powers).size != powers.size:
        raise PhotonStatsError("pump powers must be distinct")
    sxx = float(np.dot(powers, powers))
    slope = float(np.dot(powers, rates)) / sxx
    if len(pts) >= 3:
        resid = rates - slope * powers
        sigma = math.sqrt(float(np.dot(resid, resid)) / (len(pts) - 1) / sxx)
    else:
        sigma = float("nan")
    return FitResult(slope=slope, sigma=sigma)


def detection_probabilities(model) -> tuple[float, float, float]:
    """Per-pair detection probabilities (p_signal, p_idler1, p_idler2).

    ``model`` is a SourceModel-like object (pair_rate_hz, loss, splitter_ratio,
    dark_rate_hz triple, coincidence_window_s, duration_s).
    """
    loss: LossBudget = model.loss
    p_s = loss.signal_transmittance * loss.det_eff_signal
    t_i = loss.idler_transmittance
    rho = model.splitter_ratio
    return (
        p_s,
        t_i * rho * loss.det_eff_idler1,
        t_i * (1.0 - rho) * loss.det_eff_idler2,
    )


def effective_window_s(window_s: float) -> float:
    """Width actually accepted on integer-picosecond tags.

    A centered window of nominal total width tau keeps integer delays d with
    |d| <= floor(tau_ps/2), i.e. 2*floor(tau_ps/2) + 1 distinct picosecond
    delays.
    """
    tau_ps = int(round(window_s * 1e12))
    if tau_ps <= 0:
        raise PhotonStatsError("coincidence window must be >= 1 ps")
    return (2 * (tau_ps // 2) + 1) * 1e-12


def analytic_forward(model, include_accidentals: bool = False) -> CountRates:
    """Expected count rates for a source model (closed form, no simulation).

    With ``include_accidentals=False`` (default) the returned ``c_si`` is the
    true-pair coincidence rate mu*p_s*(p_i1+p_i2) and the heralded rates keep
    only partner terms, so the ideal-estimator identities hold exactly. With
    ``include_accidentals=True`` all fields are the expected *measured* rates
    on integer-picosecond tags: uncorrelated-background terms are added using
    Poisson in-window probabilities, which is what a simulated stream of the
    same model should reproduce within counting noise.
    """
    mu = model.pair_rate_hz
    p_s, p_1, p_2 = detection_probabilities(model)
    d_s, d_1, d_2 = model.dark_rate_hz
    c_s = mu * p_s + d_s
    r_1 = mu * p_1 + d_1
    r_2 = mu * p_2 + d_2
    true_si = mu * p_s * (p_1 + p_2)

    if not include_accidentals:
        return CountRates(
            c_s=c_s,
            c_i=r_1 + r_2,
            c_si=true_si,
            c_si1=mu * p_s * p_1,
            c_si2=mu * p_s * p_2,
            c_si1i2=0.0,
            duration_s=model.duration_s,
            window_s=model.coincidence_window_s,
        )

    w = effective_window_s(model.coincidence_window_s)
    c_i = r_1 + r_2
    in1 = -math.expm1(-r_1 * w)  # P(>=1 background I1 event in the window)
    in2 = -math.expm1(-r_2 * w)
    c_si1 = mu * p_s * (1.0 - (1.0 - p_1) * (1.0 - in1)) + d_s * in1
    c_si2 = mu * p_s * (1.0 - (1.0 - p_2) * (1.0 - in2)) + d_s * in2
    c_si1i2 = (
        mu * p_s * (p_1 * in2 + p_2 * in1 + (1.0 - p_1 - p_2) * in1 * in2)
        + d_s * in1 * in2
    )
    return CountRates(
        c_s=c_s,
        c_i=c_i,
        c_si=true_si + c_s * c_i * w,
        c_si1=c_si1,
        c_si2=c_si2,
        c_si1i2=c_si1i2,
        duration_s=model.duration_s,
        window_s=model.coincidence_window_s,
    )


def predicted_car(model) -> float:
    """Expected CAR: true coincidences over per-bin accidentals (bin width tau)."""
    mu = model.pair_rate_hz
    p_s, p_1, p_2 = detection_probabilities(model)
    d_s, d_1, d_2 = model.dark_rate_hz
    c_s = mu * p_s + d_s
    c_i = mu * (p_1 + p_2) + d_1 + d_2
    acc = c_s * c_i * model.coincidence_window_s
    if acc <= 0.0:
        raise UndefinedEstimateError("predicted CAR undefined: zero accidental rate")
    return mu * p_s * (p_1 + p_2) / acc


@dataclass(frozen=True)
class SpdcMetrics:
    """Figures of merit with one-standard-deviation Poisson uncertainties.

    Undefined entries (for example PGR on a stream with no coincidences, or
    brightness without a pump power) are NaN rather than errors so a full
    report can always be produced. purity = 1 - g2h_zero by construction.
    """

    pgr_hz: float
    pgr_sigma_hz: float
    brightness_hz_per_mw: float
    brightness_sigma: float
    car: float
    car_sigma: float
    car_is_lower_bound: bool
    eta_h_signal: float
    eta_h_signal_sigma: float
    eta_h_idler: float
    eta_h_idler_sigma: float
    g2h_zero: float
    g2h_sigma: float
    purity: float
    purity_sigma: float

    def rows(self) -> list[tuple[str, float, float]]:
        return [
            ("pgr_hz", self.pgr_hz, self.pgr_sigma_hz),
            ("brightness_hz_per_mw", self.brightness_hz_per_mw, self.brightness_sigma),
            ("car", self.car, self.car_sigma),
            ("car_lower_bound_flag", 1.0 if self.car_is_lower_bound else 0.0, 0.0),
            ("eta_h_signal", self.eta_h_signal, self.eta_h_signal_sigma),
            ("eta_h_idler", self.eta_h_idler, self.eta_h_idler_sigma),
            ("g2h_zero", self.g2h_zero, self.g2h_sigma),
            ("purity", self.purity, self.purity_sigma),
        ]


def compute_metrics(
    counts: CountRates,
    hist=None,
    *,
    pair_separation_prob: float = 1.0,
    splitter_ratio: float = 0.5,
    eta_d_signal: float = 1.0,
    eta_d_idler: float = 1.0,
    pump_mw: float | None = None,
) -> SpdcMetrics:
    """Assemble the full metrics report from counts plus an optional histogram.

    The default ``pair_separation_prob=1.0`` matches streams whose signal and
    idler photons arrive on distinct channels (as produced by the simulator);
    pass 0.5 for data taken behind a 50:50 pair-splitting beam splitter.
    """
    nan = float("nan")

    try:
        pgr_value = pgr(counts, splitter_ratio=splitter_ratio, pair_separation_prob=pair_separation_prob)
        pgr_sig = pgr_sigma(counts, pgr_value)
    except UndefinedEstimateError:
        pgr_value, pgr_sig = nan, nan

    if pump_mw is not None and pump_mw > 0 and not math.isnan(pgr_value):
        brightness, brightness_sig = pgr_value / pump_mw, pgr_sig / pump_mw
    else:
        brightness, brightness_sig = nan, nan

    if hist is not None:
        try:
            car_res = car_from_histogram(hist, window_s=counts.window_s)
            car, car_sig, car_lb = car_res.car, car_res.sigma, car_res.is_lower_bound
        except UndefinedEstimateError:
            car, car_sig, car_lb = nan, nan, False
    else:
        car, car_sig, car_lb = nan, nan, False

    def eta(c_coinc: float, c_heralds: float, eta_d: float) -> tuple[float, float]:
        if c_heralds <= 0 or c_coinc < 0:
            return nan, nan
        value = c_coinc / (c_heralds * eta_d)
        n_co = c_coinc * counts.duration_s
        n_h = c_heralds * counts.duration_s
        sig = value * math.sqrt(1.0 / n_co + 1.0 / n_h) if n_co > 0 else nan
        return value, sig

    eta_idler, eta_idler_sig = eta(counts.c_si, counts.c_s, eta_d_idler)
    eta_signal, eta_signal_sig = eta(counts.c_si, counts.c_i, eta_d_signal)

    try:
        g2, g2_sig = g2h_zero(counts, splitter_ratio=splitter_ratio)
    except UndefinedEstimateError:
        g2, g2_sig = nan, nan

    return SpdcMetrics(
        pgr_hz=pgr_value,
        pgr_sigma_hz=pgr_sig,
        brightness_hz_per_mw=brightness,
        brightness_sigma=brightness_sig,
        car=car,
        car_sigma=car_sig,
        car_is_lower_bound=car_lb,
        eta_h_signal=eta_signal,
        eta_h_signal_sigma=eta_signal_sig,
        eta_h_idler=eta_idler,
        eta_h_idler_sigma=eta_idler_sig,
        g2h_zero=g2,
        g2h_sigma=g2_sig,
        purity=1.0 - g2,
        purity_sigma=g2_sig,
    )
