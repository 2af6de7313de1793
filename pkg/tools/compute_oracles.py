#!/usr/bin/env python3
"""Compute frozen oracle values for the test suite with mpmath (50 digits).

Run from the repository root:  python3 tools/compute_oracles.py

Each printed value is copied verbatim into the tests as a frozen constant, so
the tests never depend on this script (or on the library under test) at run
time. Sources of truth:

- congruent LiNbO3 Sellmeier coefficients: Zelmon, Small, Jundt,
  J. Opt. Soc. Am. B 14, 3319 (1997), Table 2 (n_o and n_e, lambda in um);
- uniaxial index ellipsoid 1/n^2 = sin^2(theta)/n_e^2 + cos^2(theta)/n_o^2;
- synthetic fixture coefficients as written in the bundled .mat files.
"""

import mpmath as mp

mp.mp.dps = 50

# Zelmon 1997 congruent LiNbO3, lambda in micrometres.
ZELMON_NO = ((2.6734, 0.01764), (1.2290, 0.05914), (12.614, 474.60))
ZELMON_NE = ((2.9804, 0.02047), (0.5981, 0.0666), (8.9543, 416.08))


def sellmeier(lam_nm, terms):
    L = (mp.mpf(lam_nm) / 1000) ** 2
    n2 = mp.mpf(1)
    for B, C in terms:
        n2 += mp.mpf(str(B)) * L / (L - mp.mpf(str(C)))
    return mp.sqrt(n2)


def ellipsoid(n_o, n_e, theta_deg):
    th = mp.radians(mp.mpf(theta_deg))
    inv = mp.sin(th) ** 2 / n_e**2 + mp.cos(th) ** 2 / n_o**2
    return 1 / mp.sqrt(inv)


def show(label, value, digits=22):
    print(f"{label:44s} = {mp.nstr(value, digits)}")


print("# --- bulk congruent LiNbO3 (Zelmon 1997) ---")
no_775 = sellmeier(775, ZELMON_NO)
ne_775 = sellmeier(775, ZELMON_NE)
no_1550 = sellmeier(1550, ZELMON_NO)
ne_1550 = sellmeier(1550, ZELMON_NE)
show("n_o(775 nm)", no_775)
show("n_e(775 nm)", ne_775)
show("n_o(1550 nm)", no_1550)
show("n_e(1550 nm)", ne_1550)
show("n_theta(45 deg, 775 nm)", ellipsoid(no_775, ne_775, 45))
show("n_theta(30 deg, 1550 nm)", ellipsoid(no_1550, ne_1550, 30))

print()
print("# --- loss -> heralding efficiency, eta = 10^(-dB/10) ---")
for db in ("8.85", "8.58", "3.76", "4.82", "5.09"):
    eta = mp.power(10, -mp.mpf(db) / 10)
    show(f"eta({db} dB) [percent]", eta * 100)

print()
print("# --- synthetic_crossing fixture (theta = 90 deg) ---")
# n_o = 2.30 - 1.0e4/lam^2 (dn/dT = 0); n_e = 2.26 - 1.0e3/lam^2 + 2.0e-5*dT.
# Degeneracy: n_e(lam) = n_o(2*lam)  =>  -0.04 + 1500/lam^2 + 2e-5*dT = 0.
lam_w = mp.sqrt(mp.mpf(1500) / mp.mpf("0.04"))
show("lambda_p root (sqrt 37500)", lam_w)
# Implicit differentiation: d(lam_p)/dT = a * lam^3 / 3000 with a = 2e-5;
# the tuning rate tracks the degenerate *signal* wavelength 2*lam_p.
rate_w = 2 * mp.mpf("2e-5") * lam_w**3 / 3000
show("d(2 lambda_p)/dT closed form [nm/K]", rate_w)

print()
print("# --- synthetic_angle fixture ---")
# n_o = 2.30 + 1.0e4/lam^2; n_e90 = 2.24 + 1.0e4/lam^2 (at T_ref).
# theta = 90 degeneracy: -0.06 + 7500/lam^2 = 0.
lam_a = mp.sqrt(mp.mpf(7500) / mp.mpf("0.06"))
show("lambda_p root at 90 deg (sqrt 125000)", lam_a)


def angle_for(lam_p):
    lam_p = mp.mpf(lam_p)
    n_o_p = mp.mpf("2.30") + mp.mpf(10000) / lam_p**2
    n_e_p = mp.mpf("2.24") + mp.mpf(10000) / lam_p**2
    n_t = mp.mpf("2.30") + mp.mpf(10000) / (2 * lam_p) ** 2
    s2 = (1 / n_t**2 - 1 / n_o_p**2) / (1 / n_e_p**2 - 1 / n_o_p**2)
    return mp.degrees(mp.asin(mp.sqrt(s2)))


show("theta*(400 nm) [deg]", angle_for(400))
show("theta*(353.5533905932738 nm) [deg]", angle_for("353.55339059327376220042218105242"))
show("theta*(500 nm) [deg]", angle_for(500))

print()
print("# --- sinc^2 half maximum ---")
x_half = mp.findroot(lambda x: mp.sin(x) / x - 1 / mp.sqrt(2), mp.mpf("1.39"))
show("x with sinc^2(x) = 1/2", x_half)
# Linear-mismatch fixture: delta_k(lambda) = 4*pi*kappa*(lambda - lambda0)*1e6
# rad/mm with kappa = 1.25e-8 nm^-2  =>  FWHM = x_half/(pi*kappa*1e6*L_mm) nm.
for L in (10, 20, 40):
    show(f"linear-fixture FWHM at L={L} mm [nm]", x_half / (mp.pi * mp.mpf("1.25e-8") * 1_000_000 * L))

print()
print("# --- g2 coherent-baseline fixture ---")
# Rates C_s=1000, C_si1=C_si2=10, C_si1i2=0.2 Hz: g2 = 0.2*1000/(2*10*10).
show("g2 hand value", mp.mpf("0.2") * 1000 / (2 * 10 * 10))
