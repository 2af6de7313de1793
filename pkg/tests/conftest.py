"""Shared fixtures and fixture-material builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from bpm_spdc import LossBudget, WaveguideConfig, load_builtin
from bpm_spdc.dispersion import parse_material


@pytest.fixture(scope="session")
def mat_bulk():
    return load_builtin("ln_cln_bulk")


@pytest.fixture(scope="session")
def mat_wg():
    return load_builtin("ln_wg_effective_775")


@pytest.fixture(scope="session")
def mat_wg_matched():
    return load_builtin("ln_wg_effective_775_matched")


@pytest.fixture(scope="session")
def mat_crossing():
    return load_builtin("synthetic_crossing")


@pytest.fixture(scope="session")
def mat_angle():
    return load_builtin("synthetic_angle")


@pytest.fixture
def wg_device(mat_wg):
    return WaveguideConfig(material=mat_wg, theta_deg=53.5, length_mm=20.0, temperature_K=294.15)


@pytest.fixture
def wg_matched(mat_wg_matched):
    return WaveguideConfig(material=mat_wg_matched, theta_deg=53.5, length_mm=20.0, temperature_K=294.15)


@pytest.fixture
def wg_crossing(mat_crossing):
    return WaveguideConfig(material=mat_crossing, theta_deg=90.0, length_mm=10.0, temperature_K=293.15)


@pytest.fixture
def wg_angle(mat_angle):
    return WaveguideConfig(material=mat_angle, theta_deg=45.0, length_mm=10.0, temperature_K=293.15)


def device_loss() -> LossBudget:
    """Arm losses of the measured device: 8.58 dB signal, 8.85 dB idler."""
    return LossBudget(off_chip_signal_db=8.58, off_chip_idler_db=8.85)


def make_linear_shg_material(kappa: float = 1.25e-8, lam0: float = 1550.0):
    """Material whose frequency-doubling mismatch is exactly linear.

    The pump-polarization index is a constant 2.25 while the daughter index
    is 2.25 + kappa*lam*(lam - lam0), tabulated on a 10 nm grid. The cubic
    spline reproduces the quadratic exactly, so
    delta_k(lam) = 4*pi*1e6*kappa*(lam - lam0) rad/mm on the whole range.
    """
    lam = np.arange(700.0, 1700.0 + 1, 10.0)
    n = 2.25 + kappa * lam * (lam - lam0)
    table_block = "table = " + ", ".join(f"{x:.1f}:{float(v)!r}" for x, v in zip(lam, n))
    text = f"""
name = linear mismatch doubling fixture
lambda_min_nm = 700
lambda_max_nm = 1700
t_ref_K = 293.15

[ordinary]
{table_block}
interpolation = cubic
dn_dT = 0.0

[extraordinary]
form = poly_inverse_lambda2
coefficients = 2.25
dn_dT = 0.0
"""
    return parse_material(text, path="<linear-shg-fixture>")


def material_text(
    *,
    name: str = "test material",
    lambda_min: float = 100.0,
    lambda_max: float = 1000.0,
    t_ref: float = 293.15,
    ordinary: str = "form = poly_inverse_lambda2\ncoefficients = 2.30, -1.0e4\ndn_dT = 0.0",
    extraordinary: str = "form = poly_inverse_lambda2\ncoefficients = 2.26, -1.0e3\ndn_dT = 2.0e-5",
) -> str:
    """Assemble a material file text from branch snippets."""
    return (
        f"name = {name}\n"
        f"lambda_min_nm = {lambda_min}\n"
        f"lambda_max_nm = {lambda_max}\n"
        f"t_ref_K = {t_ref}\n\n"
        f"[ordinary]\n{ordinary}\n\n"
        f"[extraordinary]\n{extraordinary}\n"
    )
