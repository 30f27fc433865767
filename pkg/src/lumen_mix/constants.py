"""Physical constants (CODATA 2018 exact/recommended values) in SI units."""

HBAR = 1.054571817e-34  # J s
C = 2.99792458e8  # m / s
K_B = 1.380649e-23  # J / K
EPS0 = 8.8541878128e-12  # F / m
EV = 1.602176634e-19  # J

HBAR_C = HBAR * C

SOLAR_TEMPERATURE = 5777.0  # K

CONSTANTS_VERSION = "CODATA2018"
