"""Regenerate the bundled material files under src/bpm_spdc/materials/.

Data sources
------------
- Bulk congruent LiNbO3 Sellmeier coefficients: D. E. Zelmon, D. L. Small,
  D. Jundt, J. Opt. Soc. Am. B 14, 3319 (1997), 21 C.
- Thermo-optic coefficients (approximate, 1.5 um band near room temperature):
  L. Moretti, M. Iodice, F. G. Della Corte, I. Rendina, J. Appl. Phys. 98,
  036101 (2005). Rounded single values; adequate for order-of-magnitude
  thermal-tuning checks only.

The waveguide-effective files shift the bulk curves by constant offsets so the
degenerate type-1 crossing sits at a 775 nm pump for propagation at 53.5
degrees to the optic axis (mimicking how mode confinement shifts effective
indices without changing the dispersion shape). The *_matched variant zeroes
the residual index gap so the crossing is exact.

Run from the repository root:  python3 tools/make_materials.py
"""

from __future__ import annotations

import math
from pathlib import Path

OUT_DIR = Path(__file__).resolve().parent.parent / "src" / "bpm_spdc" / "materials"

# Zelmon 1997 congruent LiNbO3, lambda in um: n^2 = 1 + sum B*L/(L - C)
ZELMON_NO = (2.6734, 0.01764, 1.2290, 0.05914, 12.614, 474.60)
ZELMON_NE = (2.9804, 0.02047, 0.5981, 0.0666, 8.9543, 416.08)

# Moretti 2005, approximate values at 1.5 um, ~300 K
DN_DT_O = 4.0e-6
DN_DT_E = 3.4e-5

T_REF = 294.15

# Crossing targets for the waveguide-effective fixture
THETA_DEG = 53.5
N_TARGET_PUMP = 2.20405   # extraordinary index at theta, 775 nm
N_TARGET_SIGNAL = 2.20401  # ordinary index at 1550 nm


def sellmeier(coeffs: tuple, lambda_nm: float) -> float:
    l2 = (lambda_nm * 1e-3) ** 2
    n2 = 1.0
    for b, c in zip(coeffs[0::2], coeffs[1::2]):
        n2 += b * l2 / (l2 - c)
    return math.sqrt(n2)


def ne90_from_angle_value(n_theta: float, n_o: float, theta_deg: float) -> float:
    """Invert 1/n^2 = s2/ne90^2 + (1-s2)/no^2 for ne90."""
    s2 = math.sin(math.radians(theta_deg)) ** 2
    inv = 1.0 / n_theta**2 - (1.0 - s2) / n_o**2
    return math.sqrt(s2 / inv)


def format_table(lams: list[float], vals: list[float], per_line: int = 6) -> str:
    entries = [f"{lam:g}:{v:.12f}" for lam, v in zip(lams, vals)]
    lines = []
    for i in range(0, len(entries), per_line):
        chunk = ", ".join(entries[i : i + per_line])
        prefix = "table = " if i == 0 else "    "
        suffix = "," if i + per_line < len(entries) else ""
        lines.append(prefix + chunk + suffix)
    return "\n".join(lines)


def write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")
    print(f"wrote {path}")


def make_bulk() -> None:
    text = f"""# Bulk congruent lithium niobate, uniaxial.
# Sellmeier: Zelmon, Small, Jundt, J. Opt. Soc. Am. B 14, 3319 (1997), 21 C.
# dn/dT: Moretti et al., J. Appl. Phys. 98, 036101 (2005); approximate
# single values for the 1.5 um band near room temperature.
name = congruent LiNbO3 (bulk)
lambda_min_nm = 400
lambda_max_nm = 4000
t_ref_K = {T_REF}
citation = Zelmon 1997 JOSA-B 14 3319 (Sellmeier); Moretti 2005 JAP 98 036101 (dn/dT)

[ordinary]
form = sellmeier_um2
coefficients = {", ".join(str(c) for c in ZELMON_NO)}
dn_dT = {DN_DT_O}

[extraordinary]
form = sellmeier_um2
coefficients = {", ".join(str(c) for c in ZELMON_NE)}
dn_dT = {DN_DT_E}
"""
    write(OUT_DIR / "ln_cln_bulk.mat", text)


def make_waveguide(matched: bool) -> None:
    lams = [650.0 + 5.0 * i for i in range(231)]  # 650..1800 inclusive, nodes at 775 and 1550
    c_o = N_TARGET_SIGNAL - sellmeier(ZELMON_NO, 1550.0)
    n_o_eff_775 = sellmeier(ZELMON_NO, 775.0) + c_o
    target = N_TARGET_SIGNAL if matched else N_TARGET_PUMP
    c_e = ne90_from_angle_value(target, n_o_eff_775, THETA_DEG) - sellmeier(ZELMON_NE, 775.0)

    n_o = [sellmeier(ZELMON_NO, lam) + c_o for lam in lams]
    n_e = [sellmeier(ZELMON_NE, lam) + c_e for lam in lams]

    tag = "matched" if matched else "calibrated"
    gap = "zero index gap (crossing exactly at 775 nm)" if matched else (
        f"index gap n_e(theta)-n_o = {N_TARGET_PUMP - N_TARGET_SIGNAL:+.0e} at 775 nm"
    )
    suffix = "_matched" if matched else ""
    text = f"""# Waveguide effective indices: bulk congruent LiNbO3 curves (Zelmon 1997)
# plus constant offsets, {tag} so that at theta = {THETA_DEG} deg the
# degenerate type-1 crossing sits at a 775 nm pump ({gap}).
# Offsets: ordinary {c_o:+.9e}, extraordinary {c_e:+.9e}.
# dn/dT: Moretti 2005, approximate 1.5-um-band values.
# Grid step 5 nm; 775 nm and 1550 nm are exact nodes, so the anchor indices
# are reproduced exactly by node-exact interpolation.
name = LiNbO3 waveguide effective index (775 nm crossing{suffix and ", matched"})
lambda_min_nm = 650
lambda_max_nm = 1800
t_ref_K = {T_REF}
citation = Zelmon 1997 JOSA-B 14 3319 (shape); Moretti 2005 JAP 98 036101 (dn/dT); offsets fitted

[ordinary]
{format_table(lams, n_o)}
interpolation = cubic
dn_dT = {DN_DT_O}

[extraordinary]
{format_table(lams, n_e)}
interpolation = cubic
dn_dT = {DN_DT_E}
"""
    write(OUT_DIR / f"ln_wg_effective_775{suffix}.mat", text)


def make_synthetic_crossing() -> None:
    text = """# Synthetic closed-form fixture with a single degenerate crossing.
# Both branches are n = c0 + c1/lambda^2 (lambda in nm). Propagating at
# 90 deg, f(lambda) = n_e(lambda) - n_o(2*lambda) = -0.04 + 1500/lambda^2,
# so the pump root is lambda = sqrt(37500) = 193.649167... nm.
name = synthetic crossing fixture
lambda_min_nm = 100
lambda_max_nm = 1000
t_ref_K = 293.15

[ordinary]
form = poly_inverse_lambda2
coefficients = 2.30, -1.0e4
dn_dT = 0.0

[extraordinary]
form = poly_inverse_lambda2
coefficients = 2.26, -1.0e3
dn_dT = 2.0e-5
"""
    write(OUT_DIR / "synthetic_crossing.mat", text)


def make_synthetic_angle() -> None:
    text = """# Synthetic closed-form fixture with an interior-angle crossing and
# normal dispersion on both branches (negative uniaxial: n_e < n_o).
# n = c0 + c1/lambda^2 with lambda in nm. At a 400 nm pump the crossing
# angle is ~61.66 deg; at 90 deg the pump root is sqrt(125000) = 353.55 nm.
name = synthetic angle fixture
lambda_min_nm = 150
lambda_max_nm = 1200
t_ref_K = 293.15

[ordinary]
form = poly_inverse_lambda2
coefficients = 2.30, 1.0e4
dn_dT = 5.0e-6

[extraordinary]
form = poly_inverse_lambda2
coefficients = 2.24, 1.0e4
dn_dT = 2.5e-5
"""
    write(OUT_DIR / "synthetic_angle.mat", text)


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    make_bulk()
    make_waveguide(matched=False)
    make_waveguide(matched=True)
    make_synthetic_crossing()
    make_synthetic_angle()


if __name__ == "__main__":
    main()
