"""Reference pulse-sequence parameter sets (bundled reproduction recipes).

Rows are keyed by (species, variant):  multi-pulse sets for 2..6 pulses at
4 K, and per-temperature two-pulse sets with and without chirp.  Areas are
in units of pi, detunings in rad/ps, widths and delays in ps, chirp
coefficients in ps^2.
"""

# (delta0, sigma0, theta_pi, tau) per pulse; first pulse has tau = 0.
MULTIPULSE = {
    ("exciton", 2): [(-5.36, 1.00, 11.84, 0.0), (-20.00, 1.00, 8.44, 1.00)],
    ("exciton", 3): [(-11.28, 15.25, 6.48, 0.0), (-15.17, 1.00, 12.00, 0.89),
                     (-2.71, 1.00, 11.30, -0.90)],
    ("exciton", 4): [(-16.15, 7.54, 8.92, 0.0), (-6.09, 16.64, 1.53, -0.55),
                     (-17.56, 1.00, 11.65, 1.00), (-3.21, 1.00, 12.00, -0.73)],
    ("exciton", 5): [(-9.43, 18.24, 8.93, 0.0), (-2.04, 1.00, 5.60, -0.71),
                     (-4.66, 1.32, 10.52, -0.90), (-16.78, 2.28, 9.70, 1.00),
                     (-19.69, 1.00, 10.10, 0.96)],
    ("exciton", 6): [(-15.67, 13.54, 6.21, 0.0), (-11.00, 18.75, 7.14, -0.15),
                     (-13.32, 8.24, 6.83, 0.26), (-3.84, 1.26, 10.02, -0.64),
                     (-20.00, 1.00, 10.12, 1.00), (-4.97, 1.29, 7.57, -0.12)],
    ("biexciton", 2): [(13.93, 1.00, 14.04, 0.0), (-13.77, 1.00, 14.00, 0.15)],
    ("biexciton", 3): [(-14.90, 2.91, 6.97, 0.0), (12.28, 1.00, 14.80, -1.55),
                       (-11.72, 1.00, 15.00, -1.29)],
    ("biexciton", 4): [(-14.30, 4.94, 5.37, 0.0), (14.73, 4.62, 9.97, -1.93),
                       (-12.54, 1.00, 13.43, -0.45), (11.64, 1.00, 14.40, -0.68)],
    ("biexciton", 5): [(-14.54, 9.99, 9.81, 0.0), (12.47, 2.09, 12.39, 0.89),
                       (-3.00, 1.00, 5.60, 1.47), (11.86, 1.58, 13.53, 0.15),
                       (-13.14, 5.11, 3.63, 0.59)],
    ("biexciton", 6): [(-10.13, 1.23, 4.01, 0.0), (12.31, 1.00, 12.79, -0.09),
                       (-13.03, 1.28, 7.09, 0.69), (9.58, 1.77, 3.02, -1.99),
                       (-11.44, 1.00, 8.14, -0.58), (10.21, 6.00, 7.19, -1.55)],
}

# temperature K -> (tau, theta1_pi, theta2_pi, delta1, delta2, sigma1, sigma2)
# Note: the 4 K biexciton row uses theta1 = 14.03 pi; the multi-pulse table
# lists 14.04 pi for the same protocol (source discrepancy, kept verbatim).
TWO_PULSE_BY_T = {
    "exciton": {
        4: (1.00, 11.84, 8.44, -5.36, -20.00, 1.00, 1.00),
        8: (-1.00, 8.24, 11.96, -20.00, -5.30, 1.00, 1.00),
        12: (-1.00, 8.21, 12.00, -20.00, -5.27, 1.00, 1.00),
        16: (-0.66, 12.00, 12.00, -20.00, -5.30, 2.32, 1.00),
        20: (1.00, 12.00, 8.64, -5.26, -20.00, 1.00, 1.19),
        24: (-0.65, 12.00, 12.00, -19.99, -5.29, 2.33, 1.00),
        28: (0.19, 12.00, 12.00, -20.00, -5.30, 2.42, 1.00),
    },
    "biexciton": {
        4: (0.15, 14.03, 14.00, 13.93, -13.77, 1.00, 1.00),
        8: (0.17, 13.47, 13.33, 12.44, -12.53, 1.00, 1.00),
        12: (-0.04, 15.00, 13.58, 8.30, -13.61, 1.00, 1.00),
        16: (-0.04, 13.67, 15.00, 13.67, -8.03, 1.00, 1.00),
        20: (-0.03, 15.00, 13.63, 8.23, -13.58, 1.00, 1.00),
        24: (-0.03, 15.00, 13.65, 8.22, -13.58, 1.00, 1.00),
        28: (-0.03, 13.71, 15.00, 13.71, -8.00, 1.00, 1.00),
    },
}

# temperature K -> (tau, theta1_pi, theta2_pi, delta1, delta2,
#                   sigma1, sigma2, lambda1, lambda2)
CHIRPED_TWO_PULSE_BY_T = {
    "exciton": {
        4: (-1.00, 7.86, 12.00, -20.00, -5.66, 1.00, 1.00, -0.12, -0.33),
        8: (-1.00, 8.00, 12.00, -20.00, -5.46, 1.00, 1.00, -0.09, -0.20),
        12: (-0.42, 10.36, 9.82, -7.09, -2.53, 1.00, 1.00, -0.05, -0.05),
        16: (1.00, 12.00, 8.18, -5.27, -20.00, 1.00, 1.00, -0.05, -0.52),
        20: (-1.00, 8.59, 12.00, -20.00, -5.31, 1.23, 1.00, -0.05, -0.05),
        24: (-1.00, 8.88, 12.00, -20.00, -5.32, 1.34, 1.00, -0.05, -0.05),
        28: (1.00, 12.00, 12.00, -5.31, -20.00, 1.00, 2.14, -0.05, -0.70),
    },
    "biexciton": {
        4: (-0.14, 14.87, 14.03, -13.55, 14.58, 1.00, 1.00, -0.44, 0.00),
        8: (0.17, 15.00, 15.00, -12.64, 8.33, 1.01, 1.00, 0.70, 0.28),
        12: (0.13, 15.00, 15.00, -8.56, 12.63, 1.00, 1.00, 0.00, 0.69),
        16: (0.03, 13.40, 15.00, -13.69, 7.83, 1.00, 1.00, 0.00, 0.26),
        20: (0.10, 15.00, 14.80, -7.96, 12.79, 1.00, 1.00, 0.26, 0.70),
        24: (0.02, 15.00, 13.55, -7.62, 13.78, 1.00, 1.00, 0.25, 0.11),
        28: (0.02, 13.53, 15.00, -13.64, 7.87, 1.00, 1.00, 0.09, 0.23),
    },
}

TEMPERATURES = (4, 8, 12, 16, 20, 24, 28)


def multipulse_row(species: str, n_pulses: int) -> list:
    """Pulse dicts for the 4 K multi-pulse reference set."""
    rows = MULTIPULSE[(species, n_pulses)]
    return [{"delta0": d, "sigma0": s, "theta_pi": th, "tau": tau,
             "detuning_sign_tag": "red" if d < 0 else "blue"}
            for d, s, th, tau in rows]


def two_pulse_row(species: str, temperature: int, chirped: bool = False) -> list:
    """Pulse dicts for the per-temperature two-pulse reference sets."""
    if chirped:
        (tau, th1, th2, d1, d2, s1, s2, l1, l2) = \
            CHIRPED_TWO_PULSE_BY_T[species][temperature]
        lams = (l1, l2)
    else:
        (tau, th1, th2, d1, d2, s1, s2) = TWO_PULSE_BY_T[species][temperature]
        lams = (0.0, 0.0)
    out = []
    for i, (th, d, s) in enumerate(((th1, d1, s1), (th2, d2, s2))):
        out.append({"delta0": d, "sigma0": s, "theta_pi": th,
                    "tau": 0.0 if i == 0 else tau, "chirp_lambda": lams[i],
                    "detuning_sign_tag": "red" if d < 0 else "blue"})
    return out
