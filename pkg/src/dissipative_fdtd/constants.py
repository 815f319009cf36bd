"""Physical constants in SI units."""

from scipy import constants as _c

EPS0 = _c.epsilon_0
MU0 = _c.mu_0
C0 = _c.c
ETA0 = (MU0 / EPS0) ** 0.5
