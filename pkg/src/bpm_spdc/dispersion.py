"""Temperature-dependent refractive-index models for uniaxial crystals.

A material carries an ordinary and an extraordinary index branch. Each branch
is either a closed-form dispersion formula or a tabulated curve, plus a linear
thermo-optic coefficient:

    n(lambda, T) = n_base(lambda) + dn_dT * (T - T_ref)

The angle-resolved extraordinary index follows the uniaxial index ellipsoid:

    1 / n(theta)^2 = sin(theta)^2 / n_e(90)^2 + cos(theta)^2 / n_o^2

with theta the angle between the propagation direction and the optic axis in
degrees. Evaluation outside the declared wavelength range is a hard error,
never extrapolation: dispersion formulas diverge near their poles and a silent
extrapolation would corrupt every downstream solve.

Supported closed forms
----------------------
``poly_inverse_lambda2``
    n = c0 + c1/lambda^2 + c2/lambda^4 + ...   (lambda in nm)
``sellmeier_um2``
    n^2 = 1 + sum_k B_k * L / (L - C_k),  L = lambda_um^2
    coefficients ordered B1, C1, B2, C2, ...   (lambda in um, C_k in um^2)

All evaluation functions accept scalars or numpy arrays and are pure; loaded
materials are immutable and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.interpolate import CubicSpline

from .sections import SectionedFile, SectionedFormatError, parse_sections

ArrayLike = Union[float, np.ndarray]

SELLMEIER_FORMS = ("poly_inverse_lambda2", "sellmeier_um2")
INTERPOLATIONS = ("linear", "cubic")

# Thermal band (kelvin around T_ref) over which a material must stay physical.
THERMAL_BAND_K = 100.0


class DispersionError(ValueError):
    """Base class for material-model errors."""


class WavelengthRangeError(DispersionError):
    """Wavelength outside the material's declared validity range."""

    def __init__(self, lambda_nm: float, lo: float, hi: float, name: str = ""):
        self.lambda_nm = float(lambda_nm)
        label = f" of material {name!r}" if name else ""
        super().__init__(
            f"wavelength {lambda_nm:g} nm outside valid range [{lo:g}, {hi:g}] nm{label}"
        )


class MaterialFormatError(DispersionError):
    """Material file violates the schema or a load-time invariant."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)


def _as_array(x: ArrayLike) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


@dataclass(frozen=True)
class SellmeierBranch:
    """Closed-form index branch with a linear thermo-optic term."""

    form: str
    coefficients: tuple[float, ...]
    dn_dT: float = 0.0

    def __post_init__(self):
        if self.form not in SELLMEIER_FORMS:
            raise MaterialFormatError(
                f"unknown dispersion form {self.form!r}; expected one of {SELLMEIER_FORMS}"
            )
        if self.form == "poly_inverse_lambda2" and len(self.coefficients) < 1:
            raise MaterialFormatError("poly_inverse_lambda2 needs at least one coefficient")
        if self.form == "sellmeier_um2":
            if len(self.coefficients) < 2 or len(self.coefficients) % 2 != 0:
                raise MaterialFormatError(
                    "sellmeier_um2 needs an even number of coefficients (B1, C1, B2, C2, ...)"
                )

    def base_index(self, lambda_nm: ArrayLike) -> ArrayLike:
        lam, scalar = _as_array(lambda_nm)
        if self.form == "poly_inverse_lambda2":
            inv_l2 = 1.0 / (lam * lam)
            out = np.full_like(lam, self.coefficients[0], dtype=float)
            term = np.ones_like(lam)
            for c in self.coefficients[1:]:
                term = term * inv_l2
                out = out + c * term
        else:  # sellmeier_um2
            l2 = (lam * 1e-3) ** 2
            n2 = np.ones_like(l2)
            pairs = zip(self.coefficients[0::2], self.coefficients[1::2])
            for b, c in pairs:
                n2 = n2 + b * l2 / (l2 - c)
            out = np.sqrt(n2)
        return float(out) if scalar else out

    def index(self, lambda_nm: ArrayLike, delta_T: float) -> ArrayLike:
        return self.base_index(lambda_nm) + self.dn_dT * delta_T


@dataclass(frozen=True)
class TabulatedBranch:
    """Tabulated index branch; interpolation at a grid node is node-exact."""

    wavelengths_nm: np.ndarray
    indices: np.ndarray
    interpolation: str = "cubic"
    dn_dT: float = 0.0
    _spline: CubicSpline | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        lam = np.asarray(self.wavelengths_nm, dtype=float)
        val = np.asarray(self.indices, dtype=float)
        object.__setattr__(self, "wavelengths_nm", lam)
        object.__setattr__(self, "indices", val)
        if self.interpolation not in INTERPOLATIONS:
            raise MaterialFormatError(
                f"unknown interpolation {self.interpolation!r}; expected one of {INTERPOLATIONS}"
            )
        if lam.ndim != 1 or lam.size < 4:
            raise MaterialFormatError("tabulated branch needs at least 4 (lambda, n) pairs")
        if lam.size != val.size:
            raise MaterialFormatError("tabulated branch: wavelength/index count mismatch")
        if not np.all(np.diff(lam) > 0):
            raise MaterialFormatError("tabulated branch: wavelength grid must be strictly increasing")
        if self.interpolation == "cubic":
            object.__setattr__(self, "_spline", CubicSpline(lam, val, bc_type="not-a-knot"))

    def base_index(self, lambda_nm: ArrayLike) -> ArrayLike:
        lam, scalar = _as_array(lambda_nm)
        if self.interpolation == "cubic":
            out = self._spline(lam)
        else:
            out = np.interp(lam, self.wavelengths_nm, self.indices)
        return float(out) if scalar else out

    def index(self, lambda_nm: ArrayLike, delta_T: float) -> ArrayLike:
        return self.base_index(lambda_nm) + self.dn_dT * delta_T


IndexBranch = Union[SellmeierBranch, TabulatedBranch]


@dataclass(frozen=True)
class MaterialDispersion:
    """Immutable two-branch index model with a declared wavelength range."""

    name: str
    ordinary: IndexBranch
    extraordinary: IndexBranch
    lambda_min_nm: float
    lambda_max_nm: float
    t_ref_K: float
    citation: str = ""

    def __post_init__(self):
        if not (self.lambda_min_nm > 0 and self.lambda_max_nm > self.lambda_min_nm):
            raise MaterialFormatError(
                f"material {self.name!r}: need 0 < lambda_min < lambda_max, "
                f"got [{self.lambda_min_nm}, {self.lambda_max_nm}]"
            )

    @property
    def valid_range(self) -> tuple[float, float]:
        return (self.lambda_min_nm, self.lambda_max_nm)

    def check_range(self, lambda_nm: ArrayLike) -> None:
        lam, _ = _as_array(lambda_nm)
        bad = (lam < self.lambda_min_nm) | (lam > self.lambda_max_nm)
        if np.any(bad):
            offending = float(np.atleast_1d(lam)[np.atleast_1d(bad)][0])
            raise WavelengthRangeError(offending, self.lambda_min_nm, self.lambda_max_nm, self.name)


def validate_angle(theta_deg: float) -> float:
    theta = float(theta_deg)
    if not (0.0 <= theta <= 90.0) or math.isnan(theta):
        raise DispersionError(f"propagation angle must be within [0, 90] degrees, got {theta_deg!r}")
    return theta


def index_ordinary(model: MaterialDispersion, lambda_nm: ArrayLike, t_K: float) -> ArrayLike:
    """Ordinary index n_o(lambda, T); independent of propagation angle."""
    model.check_range(lambda_nm)
    return model.ordinary.index(lambda_nm, float(t_K) - model.t_ref_K)


def index_extraordinary_principal(model: MaterialDispersion, lambda_nm: ArrayLike, t_K: float) -> ArrayLike:
    """Principal extraordinary index n_e(lambda, T), i.e. propagation at 90 degrees."""
    model.check_range(lambda_nm)
    return model.extraordinary.index(lambda_nm, float(t_K) - model.t_ref_K)


def index_extraordinary_at_angle(
    model: MaterialDispersion, lambda_nm: ArrayLike, t_K: float, theta_deg: float
) -> ArrayLike:
    """Extraordinary index seen by a wave propagating at ``theta_deg`` to the optic axis.

    Solves 1/n^2 = sin^2(theta)/n_e(90)^2 + cos^2(theta)/n_o^2. The result is
    clamped to [min(n_o, n_e), max(n_o, n_e)] to absorb last-ulp rounding, and
    the theta = 0/90 endpoints return the principal values bit-exactly.
    """
    theta = validate_angle(theta_deg)
    n_o = index_ordinary(model, lambda_nm, t_K)
    n_e = index_extraordinary_principal(model, lambda_nm, t_K)
    s2 = math.sin(math.radians(theta)) ** 2
    if s2 == 0.0:
        return n_o
    if s2 == 1.0:
        return n_e
    inv = (1.0 - s2) / np.square(n_o) + s2 / np.square(n_e)
    n = 1.0 / np.sqrt(inv)
    n = np.clip(n, np.minimum(n_o, n_e), np.maximum(n_o, n_e))
    return float(n) if np.ndim(lambda_nm) == 0 else n


_TOP_KEYS = {"name", "lambda_min_nm", "lambda_max_nm", "t_ref_K", "citation", "notes"}
_BRANCH_KEYS = {"form", "coefficients", "dn_dT", "table", "interpolation"}


def _parse_branch(doc: SectionedFile, section: str) -> IndexBranch:
    if section not in doc.sections:
        raise MaterialFormatError(f"missing required section [{section}]", path=doc.path)
    keys = doc.sections[section]
    for key, (_, line) in keys.items():
        if key not in _BRANCH_KEYS:
            raise MaterialFormatError(f"unknown key {key!r} in [{section}]", line, doc.path)

    dn_dT = 0.0
    if "dn_dT" in keys:
        try:
            dn_dT = float(keys["dn_dT"][0])
        except ValueError:
            raise MaterialFormatError(
                f"[{section}] dn_dT: expected a number, got {keys['dn_dT'][0]!r}",
                doc.line_of(section, "dn_dT"),
                doc.path,
            ) from None

    has_form = "form" in keys or "coefficients" in keys
    has_table = "table" in keys
    if has_form == has_table:
        raise MaterialFormatError(
            f"[{section}] must define either form+coefficients or table, not both/neither",
            doc.section_lines.get(section),
            doc.path,
        )

    if has_table:
        text, line = keys["table"]
        lams, vals = [], []
        for item in text.split(","):
            item = item.strip()
            if not item:
                continue
            left, sep, right = item.partition(":")
            if not sep:
                raise MaterialFormatError(
                    f"[{section}] table entry {item!r} is not 'lambda:n'", line, doc.path
                )
            try:
                lams.append(float(left))
                vals.append(float(right))
            except ValueError:
                raise MaterialFormatError(
                    f"[{section}] table entry {item!r} has a non-numeric field", line, doc.path
                ) from None
        interpolation = keys.get("interpolation", ("cubic", 0))[0]
        try:
            return TabulatedBranch(np.array(lams), np.array(vals), interpolation, dn_dT)
        except MaterialFormatError as exc:
            raise MaterialFormatError(f"[{section}] {exc}", line, doc.path) from None

    if "form" not in keys or "coefficients" not in keys:
        raise MaterialFormatError(
            f"[{section}] needs both 'form' and 'coefficients'",
            doc.section_lines.get(section),
            doc.path,
        )
    form, form_line = keys["form"]
    coeff_text, coeff_line = keys["coefficients"]
    try:
        coefficients = tuple(float(c) for c in coeff_text.split(",") if c.strip())
    except ValueError:
        raise MaterialFormatError(
            f"[{section}] coefficients must be comma-separated numbers", coeff_line, doc.path
        ) from None
    try:
        return SellmeierBranch(form, coefficients, dn_dT)
    except MaterialFormatError as exc:
        raise MaterialFormatError(f"[{section}] {exc}", form_line, doc.path) from None


def _validate_material(model: MaterialDispersion, doc: SectionedFile) -> None:
    """Load-time physicality checks over the declared wavelength and thermal band."""
    for label, branch in (("ordinary", model.ordinary), ("extraordinary", model.extraordinary)):
        if isinstance(branch, TabulatedBranch):
            if branch.wavelengths_nm[0] > model.lambda_min_nm or branch.wavelengths_nm[-1] < model.lambda_max_nm:
                raise MaterialFormatError(
                    f"[{label}] table spans [{branch.wavelengths_nm[0]:g}, {branch.wavelengths_nm[-1]:g}] nm "
                    f"but must cover the declared range [{model.lambda_min_nm:g}, {model.lambda_max_nm:g}] nm",
                    path=doc.path,
                )
        elif branch.form == "sellmeier_um2":
            lo_um2 = (model.lambda_min_nm * 1e-3) ** 2
            hi_um2 = (model.lambda_max_nm * 1e-3) ** 2
            for c in branch.coefficients[1::2]:
                if lo_um2 <= c <= hi_um2:
                    raise MaterialFormatError(
                        f"[{label}] resonance at {math.sqrt(c) * 1e3:.1f} nm lies inside the declared range",
                        path=doc.path,
                    )
        grid = np.linspace(model.lambda_min_nm, model.lambda_max_nm, 512)
        for t in (model.t_ref_K - THERMAL_BAND_K, model.t_ref_K, model.t_ref_K + THERMAL_BAND_K):
            n = branch.index(grid, t - model.t_ref_K)
            if not np.all(np.isfinite(n)) or np.any(n <= 1.0):
                raise MaterialFormatError(
                    f"[{label}] index is not finite and > 1 over the declared range at T = {t:g} K",
                    path=doc.path,
                )


def parse_material(text: str, path: str | None = None) -> MaterialDispersion:
    """Parse and validate a material definition from text. Pure; no global state."""
    try:
        doc = parse_sections(text, path=path)
    except SectionedFormatError as exc:
        raise MaterialFormatError(str(exc)) from exc

    for key, (_, line) in doc.top.items():
        if key not in _TOP_KEYS:
            raise MaterialFormatError(f"unknown top-level key {key!r}", line, doc.path)
    for section in doc.sections:
        if section not in ("ordinary", "extraordinary"):
            raise MaterialFormatError(
                f"unknown section [{section}]", doc.section_lines.get(section), doc.path
            )

    def top_float(key: str) -> float:
        text_value = doc.require(None, key)
        try:
            return float(text_value)
        except ValueError:
            raise MaterialFormatError(
                f"key {key!r}: expected a number, got {text_value!r}", doc.line_of(None, key), doc.path
            ) from None

    try:
        model = MaterialDispersion(
            name=doc.require(None, "name"),
            ordinary=_parse_branch(doc, "ordinary"),
            extraordinary=_parse_branch(doc, "extraordinary"),
            lambda_min_nm=top_float("lambda_min_nm"),
            lambda_max_nm=top_float("lambda_max_nm"),
            t_ref_K=top_float("t_ref_K"),
            citation=doc.get(None, "citation", "") or "",
        )
    except SectionedFormatError as exc:  # missing required keys surface uniformly
        raise MaterialFormatError(str(exc)) from exc
    _validate_material(model, doc)
    return model


def load_material(path) -> MaterialDispersion:
    """Load a material file. See the module docstring for the accepted grammar."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_material(text, path=str(path))
