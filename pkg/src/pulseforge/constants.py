"""Physical constants and shared numerical defaults (units: ps, rad/ps, K)."""

# k_B / hbar in rad ps^-1 K^-1  (k_B = 8.617e-2 meV/K, hbar = 0.6582 meV ps).
# Fixed constant, not user-configurable, so output files are comparable.
KB_OVER_HBAR = 0.13092

# Frequency integrals are cut off where the Gaussian factor of the spectral
# density has suppressed the integrand far below double precision.
OMEGA_MAX_FACTOR = 8.0

# Relative tolerance for adaptive frequency quadratures.
QUAD_RTOL = 1e-12

# Default bath memory window (ps) retained in the influence kernel.
DEFAULT_MEMORY_TIME = 3.0

# Default relative SVD truncation threshold for process-tensor compression.
DEFAULT_SVD_TOL = 1e-10

DEFAULT_DT = 0.01
DEFAULT_T_FINAL = 30.0
