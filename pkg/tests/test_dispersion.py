"""Material model tests: closed forms, tables, thermal terms, angle relation.

Closed-form oracle values were computed independently with mpmath at 50
significant digits from the published coefficients (Zelmon 1997 Sellmeier
fit for congruent LiNbO3 at 21 C) and are frozen here.
"""

import numpy as np
import pytest

from bpm_spdc.dispersion import (
    DispersionError,
    MaterialFormatError,
    SellmeierBranch,
    TabulatedBranch,
    WavelengthRangeError,
    index_extraordinary_at_angle,
    index_extraordinary_principal,
    index_ordinary,
    load_material,
    parse_material,
    validate_angle,
)

from conftest import make_linear_shg_material, material_text

T_BULK = 294.15  # reference temperature of the bulk file (21 C)

# mpmath 50-digit evaluations of the Zelmon 1997 Sellmeier forms.
ZELMON_ORACLES = [
    # (branch, lambda_nm, value)
    ("o", 775.0, 2.25865829799887236171),
    ("e", 775.0, 2.178372318044694347449),
    ("o", 1550.0, 2.211111008653573794415),
    ("e", 1550.0, 2.137559649785556384368),
]

# Index-ellipsoid oracle at interior angles, same precision.
ANGLE_ORACLES = [
    (45.0, 775.0, 2.217425963307036564217),
    (30.0, 1550.0, 2.192013521304055773296),
]


class TestSellmeierEvaluation:
    @pytest.mark.parametrize("branch, lam, expected", ZELMON_ORACLES)
    def test_bulk_against_extended_precision(self, mat_bulk, branch, lam, expected):
        fn = index_ordinary if branch == "o" else index_extraordinary_principal
        assert fn(mat_bulk, lam, T_BULK) == pytest.approx(expected, rel=1e-12)

    def test_poly_inverse_lambda2_hand_value(self):
        b = SellmeierBranch("poly_inverse_lambda2", (2.0, 1.0e4, 1.0e8))
        # 2 + 1e4/400^2 + 1e8/400^4 = 2 + 0.0625 + 0.00390625
        assert b.base_index(400.0) == pytest.approx(2.06640625, rel=1e-15)

    def test_array_matches_scalar_loop(self, mat_bulk):
        lams = np.array([500.0, 775.0, 1550.0, 3000.0])
        vec = index_ordinary(mat_bulk, lams, T_BULK)
        ref = [index_ordinary(mat_bulk, lam, T_BULK) for lam in lams]
        np.testing.assert_allclose(vec, ref, rtol=0, atol=0)
        assert isinstance(index_ordinary(mat_bulk, 775.0, T_BULK), float)

    def test_thermal_term_is_linear(self, mat_bulk):
        base = index_ordinary(mat_bulk, 775.0, T_BULK)
        shifted = index_ordinary(mat_bulk, 775.0, T_BULK + 50.0)
        assert shifted - base == pytest.approx(50.0 * 4e-6, rel=1e-9)
        base_e = index_extraordinary_principal(mat_bulk, 1550.0, T_BULK)
        cooled = index_extraordinary_principal(mat_bulk, 1550.0, T_BULK - 20.0)
        assert cooled - base_e == pytest.approx(-20.0 * 3.4e-5, rel=1e-9)


class TestAngleRelation:
    def test_endpoints_return_principal_indices_bit_exactly(self, mat_bulk):
        for lam in (500.0, 775.0, 1550.0):
            n_o = index_ordinary(mat_bulk, lam, T_BULK)
            n_e = index_extraordinary_principal(mat_bulk, lam, T_BULK)
            assert index_extraordinary_at_angle(mat_bulk, lam, T_BULK, 0.0) == n_o
            assert index_extraordinary_at_angle(mat_bulk, lam, T_BULK, 90.0) == n_e

    @pytest.mark.parametrize("theta, lam, expected", ANGLE_ORACLES)
    def test_interior_angles_against_extended_precision(self, mat_bulk, theta, lam, expected):
        got = index_extraordinary_at_angle(mat_bulk, lam, T_BULK, theta)
        assert got == pytest.approx(expected, rel=1e-12)

    def test_bounded_and_monotone_in_theta(self, mat_bulk):
        lam = 1000.0
        n_o = index_ordinary(mat_bulk, lam, T_BULK)
        n_e = index_extraordinary_principal(mat_bulk, lam, T_BULK)
        thetas = np.linspace(0.0, 90.0, 91)
        values = np.array(
            [index_extraordinary_at_angle(mat_bulk, lam, T_BULK, th) for th in thetas]
        )
        assert np.all(values <= n_o) and np.all(values >= n_e)  # negative uniaxial
        assert np.all(np.diff(values) <= 0)

    def test_array_wavelengths_at_fixed_angle(self, mat_bulk):
        lams = np.array([600.0, 775.0, 1550.0])
        vec = index_extraordinary_at_angle(mat_bulk, lams, T_BULK, 37.0)
        ref = [index_extraordinary_at_angle(mat_bulk, lam, T_BULK, 37.0) for lam in lams]
        np.testing.assert_allclose(vec, ref, rtol=0, atol=0)

    @pytest.mark.parametrize("theta", [-0.001, 90.001, 180.0, float("nan")])
    def test_angle_validation(self, theta):
        with pytest.raises(DispersionError, match=r"within \[0, 90\]"):
            validate_angle(theta)

    def test_validate_angle_accepts_endpoints(self):
        assert validate_angle(0.0) == 0.0
        assert validate_angle(90.0) == 90.0


class TestWavelengthRange:
    def test_out_of_range_raises_with_fields(self, mat_bulk):
        with pytest.raises(WavelengthRangeError, match="399 nm") as exc_info:
            index_ordinary(mat_bulk, 399.0, T_BULK)
        assert exc_info.value.lambda_nm == 399.0
        assert "[400, 4000]" in str(exc_info.value)
        assert mat_bulk.name in str(exc_info.value)

    def test_first_offender_reported_for_arrays(self, mat_bulk):
        with pytest.raises(WavelengthRangeError) as exc_info:
            index_ordinary(mat_bulk, np.array([500.0, 4321.0, 5000.0]), T_BULK)
        assert exc_info.value.lambda_nm == 4321.0

    def test_no_extrapolation_above_range(self, mat_bulk):
        with pytest.raises(WavelengthRangeError):
            index_extraordinary_principal(mat_bulk, 4000.1, T_BULK)

    def test_valid_range_property(self, mat_bulk):
        assert mat_bulk.valid_range == (400.0, 4000.0)


class TestTabulatedBranch:
    def test_interpolation_is_node_exact(self, mat_wg):
        # Grid nodes must reproduce the stored values exactly, both schemes.
        branch = mat_wg.ordinary
        for k in (0, 25, len(branch.wavelengths_nm) // 2, len(branch.wavelengths_nm) - 1):
            node = float(branch.wavelengths_nm[k])
            assert branch.base_index(node) == pytest.approx(float(branch.indices[k]), abs=2e-15)
        # 775 and 1550 are nodes of the bundled waveguide file with known values.
        assert index_ordinary(mat_wg, 775.0, 294.15) == pytest.approx(2.251557289345, abs=1e-12)
        assert index_ordinary(mat_wg, 1550.0, 294.15) == pytest.approx(2.204010000000, abs=1e-12)

    def test_cubic_spline_reproduces_quadratic(self):
        mat = make_linear_shg_material()
        lam = np.linspace(701.3, 1698.7, 400)  # off-node points
        expected = 2.25 + 1.25e-8 * lam * (lam - 1550.0)
        got = index_ordinary(mat, lam, 293.15)
        np.testing.assert_allclose(got, expected, rtol=0, atol=1e-12)

    def test_linear_interpolation_differs_off_node(self):
        lam = np.arange(700.0, 1700.0 + 1, 10.0)
        val = 2.25 + 1.25e-8 * lam * (lam - 1550.0)
        cubic = TabulatedBranch(lam, val, "cubic")
        linear = TabulatedBranch(lam, val, "linear")
        mid = 775.0  # midpoint of the 770-780 interval, worst case for the chord
        true_mid = 2.25 + 1.25e-8 * mid * (mid - 1550.0)
        assert abs(cubic.base_index(mid) - true_mid) < 1e-12
        assert abs(linear.base_index(mid) - true_mid) > 1e-9  # chord misses the curve

    def test_tabulated_thermal_term(self):
        lam = np.arange(700.0, 1700.0 + 1, 10.0)
        branch = TabulatedBranch(lam, np.full_like(lam, 2.0), "linear", dn_dT=1e-4)
        assert branch.index(1000.0, 25.0) == pytest.approx(2.0 + 25.0 * 1e-4, rel=1e-15)

    @pytest.mark.parametrize(
        "kwargs, match",
        [
            (dict(wavelengths_nm=[1, 2, 3], indices=[2, 2, 2]), "at least 4"),
            (dict(wavelengths_nm=[1, 2, 3, 4], indices=[2, 2, 2]), "count mismatch"),
            (dict(wavelengths_nm=[1, 2, 2, 4], indices=[2, 2, 2, 2]), "strictly increasing"),
            (dict(wavelengths_nm=[1, 2, 3, 4], indices=[2, 2, 2, 2], interpolation="spline"), "unknown interpolation"),
        ],
    )
    def test_construction_errors(self, kwargs, match):
        with pytest.raises(MaterialFormatError, match=match):
            TabulatedBranch(**kwargs)


class TestSellmeierBranchValidation:
    def test_unknown_form(self):
        with pytest.raises(MaterialFormatError, match="unknown dispersion form"):
            SellmeierBranch("cauchy", (2.0,))

    def test_sellmeier_needs_pairs(self):
        with pytest.raises(MaterialFormatError, match="even number"):
            SellmeierBranch("sellmeier_um2", (2.6, 0.01, 1.2))

    def test_poly_needs_a_coefficient(self):
        with pytest.raises(MaterialFormatError, match="at least one"):
            SellmeierBranch("poly_inverse_lambda2", ())


class TestMaterialParsing:
    def test_parse_minimal_material(self):
        mat = parse_material(material_text())
        assert mat.name == "test material"
        assert mat.t_ref_K == 293.15
        assert index_ordinary(mat, 200.0, 293.15) == pytest.approx(2.30 - 1e4 / 200.0**2, rel=1e-15)

    def test_citation_is_optional_and_kept(self):
        text = material_text().replace("t_ref_K = 293.15", "t_ref_K = 293.15\ncitation = someone 2001")
        assert parse_material(text).citation == "someone 2001"
        assert parse_material(material_text()).citation == ""

    def test_load_material_from_file(self, tmp_path):
        p = tmp_path / "m.mat"
        p.write_text(material_text())
        mat = load_material(p)
        assert mat.name == "test material"

    @pytest.mark.parametrize(
        "mutate, match",
        [
            (lambda t: t.replace("name = test material\n", ""), "missing required key 'name'"),
            (lambda t: t.replace("lambda_min_nm = 100.0", "lambda_min_nm = fast"), "expected a number"),
            (lambda t: t.replace("name = test material", "name = test material\nmystery = 1"), "unknown top-level key 'mystery'"),
            (lambda t: t + "\n[cladding]\nform = poly_inverse_lambda2\ncoefficients = 1.5\n", r"unknown section \[cladding\]"),
            (lambda t: t.split("[extraordinary]")[0], r"missing required section \[extraordinary\]"),
            (lambda t: t.replace("lambda_min_nm = 100.0", "lambda_min_nm = 2000.0"), "0 < lambda_min < lambda_max"),
        ],
    )
    def test_schema_errors(self, mutate, match):
        with pytest.raises(MaterialFormatError, match=match):
            parse_material(mutate(material_text()))

    def test_unknown_branch_key_has_line_number(self):
        text = material_text(ordinary="form = poly_inverse_lambda2\ncoefficients = 2.30\nporosity = 3\n")
        with pytest.raises(MaterialFormatError, match="unknown key 'porosity'") as exc_info:
            parse_material(text, path="bad.mat")
        assert exc_info.value.line is not None
        assert str(exc_info.value).startswith(f"bad.mat:{exc_info.value.line}:")

    def test_branch_needs_form_or_table_not_both(self):
        both = "form = poly_inverse_lambda2\ncoefficients = 2.30\ntable = 100:2.0, 200:2.0, 300:2.0, 1000:2.0\n"
        with pytest.raises(MaterialFormatError, match="not both/neither"):
            parse_material(material_text(ordinary=both))
        with pytest.raises(MaterialFormatError, match="not both/neither"):
            parse_material(material_text(ordinary="dn_dT = 0.0"))

    def test_table_entry_errors(self):
        with pytest.raises(MaterialFormatError, match="is not 'lambda:n'"):
            parse_material(material_text(ordinary="table = 100:2.0, 200 2.0, 300:2.0, 1000:2.0"))
        with pytest.raises(MaterialFormatError, match="non-numeric field"):
            parse_material(material_text(ordinary="table = 100:2.0, 200:two, 300:2.0, 1000:2.0"))

    def test_bad_coefficients_and_dn_dT(self):
        with pytest.raises(MaterialFormatError, match="comma-separated numbers"):
            parse_material(material_text(ordinary="form = poly_inverse_lambda2\ncoefficients = a, b\n"))
        with pytest.raises(MaterialFormatError, match="dn_dT: expected a number"):
            parse_material(
                material_text(ordinary="form = poly_inverse_lambda2\ncoefficients = 2.30\ndn_dT = warm\n")
            )

    def test_table_must_cover_declared_range(self):
        text = material_text(ordinary="table = 150:2.0, 200:2.0, 300:2.0, 1000:2.0\ndn_dT = 0.0")
        with pytest.raises(MaterialFormatError, match="must cover the declared range"):
            parse_material(text)

    def test_sellmeier_resonance_inside_range_rejected(self):
        # C = 0.25 um^2 -> resonance at 500 nm, inside [100, 1000] nm.
        text = material_text(ordinary="form = sellmeier_um2\ncoefficients = 2.0, 0.25\ndn_dT = 0.0")
        with pytest.raises(MaterialFormatError, match="resonance at 500.0 nm"):
            parse_material(text)

    def test_unphysical_index_rejected(self):
        text = material_text(ordinary="form = poly_inverse_lambda2\ncoefficients = 0.9\ndn_dT = 0.0")
        with pytest.raises(MaterialFormatError, match="finite and > 1"):
            parse_material(text)

    def test_thermal_band_physicality(self):
        # dn_dT so large the index dips below 1 within the +-100 K band.
        text = material_text(ordinary="form = poly_inverse_lambda2\ncoefficients = 1.5\ndn_dT = 0.01\n")
        with pytest.raises(MaterialFormatError, match="finite and > 1"):
            parse_material(text)

    def test_builtin_materials_all_load(self):
        from bpm_spdc import builtin_names, load_builtin

        names = builtin_names()
        assert {"ln_cln_bulk", "ln_wg_effective_775", "ln_wg_effective_775_matched",
                "synthetic_angle", "synthetic_crossing"} <= set(names)
        for name in names:
            mat = load_builtin(name)
            assert mat.lambda_max_nm > mat.lambda_min_nm

    def test_unknown_builtin_lists_available(self):
        from bpm_spdc import builtin_path

        with pytest.raises(FileNotFoundError, match="ln_cln_bulk"):
            builtin_path("unobtainium")
