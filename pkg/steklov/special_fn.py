import cmath
import logging
import math
from pathlib import Path
from typing import Iterable, Optional, Tuple, Union

import pandas as pd

from steklov.errors import SingularPointError

logger = logging.getLogger(__name__)

Number = Union[complex, float, int]

# Lanczos g = 7, nine coefficients
LANCZOS_G = 7.0
LANCZOS_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
HALF_LOG_TWO_PI = 0.5 * math.log(2.0 * math.pi)
EULER_GAMMA = 0.57721566490153286061

# B_{2k} / (2k) for the digamma tail, k = 1..7
DIGAMMA_TAIL = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)
DIGAMMA_SHIFT = 10.0

PSI_CROSSOVER = 8.0
PSI_MAX_TERMS = 400
PSI_REL_TOL = 1e-16
POLE_TOL = 1e-14

ORACLE_PATH = Path(__file__).parent / "data" / "gamma_oracle.csv"
ORACLE_POINTS = (0.5, 1.5, 2.5, 1.0 / 3.0, 0.25, 2.0 / 3.0, 0.75, 0.1, -0.5, -1.5, 1j, 1 + 1j, 5.0)


def _check_pole(z: complex):
    if z.imag == 0 and z.real <= 0 and abs(z.real - round(z.real)) <= POLE_TOL:
        raise SingularPointError(f"Gamma has a pole at z = {z}")


def _lanczos_sum(z: complex) -> complex:
    """Partial fraction sum of the Lanczos approximation at z - 1"""
    x = LANCZOS_COEFFS[0]
    for i, p in enumerate(LANCZOS_COEFFS[1:]):
        x += p / (z + i)
    return x


def complex_gamma(z: Number) -> complex:
    """Gamma(z) via Lanczos for Re z >= 1/2 and reflection below"""
    z = complex(z)
    _check_pole(z)
    if z.real < 0.5:
        return cmath.pi / (cmath.sin(cmath.pi * z) * complex_gamma(1.0 - z))
    t = z + LANCZOS_G - 0.5
    return math.sqrt(2.0 * math.pi) * t ** (z - 0.5) * cmath.exp(-t) * _lanczos_sum(z)


def log_gamma(z: Number) -> complex:
    """
    ln Gamma(z). For Re z >= 1/2 this is the analytic continuation from the
    positive axis; below, the reflection formula with principal logs is used,
    so only exp(log_gamma(z)) == Gamma(z) is guaranteed there.
    """
    z = complex(z)
    _check_pole(z)
    if z.real < 0.5:
        return cmath.log(cmath.pi) - cmath.log(cmath.sin(cmath.pi * z)) - log_gamma(1.0 - z)
    t = z + LANCZOS_G - 0.5
    return HALF_LOG_TWO_PI + (z - 0.5) * cmath.log(t) - t + cmath.log(_lanczos_sum(z))


def complex_digamma(z: Number) -> complex:
    """Gamma'(z)/Gamma(z): reflection, upward recurrence, then the Stirling tail"""
    z = complex(z)
    _check_pole(z)
    if z.real < 0.5:
        return complex_digamma(1.0 - z) - cmath.pi / cmath.tan(cmath.pi * z)
    acc = 0j
    while z.real < DIGAMMA_SHIFT:
        acc -= 1.0 / z
        z += 1.0
    inv_sq = 1.0 / (z * z)
    power = inv_sq
    tail = 0j
    for coeff in DIGAMMA_TAIL:
        tail += coeff * power
        power *= inv_sq
    return acc + cmath.log(z) - 0.5 / z - tail


def pochhammer(a: Number, k: int) -> complex:
    """Rising factorial (a)_k = a (a+1) ... (a+k-1)"""
    result = 1.0 + 0j
    for i in range(k):
        result *= a + i
    return result


# ========== KUMMER psi(a, 1, zeta) ==========

def log_upper_sheet(zeta: complex) -> complex:
    """ln zeta with 0 <= arg zeta < 2 pi"""
    value = cmath.log(zeta)
    if value.imag < 0:
        value += 2j * cmath.pi
    return value


def _is_nonpositive_integer(a: complex) -> bool:
    return a.imag == 0 and a.real <= 0 and a.real == round(a.real)


def psi_series(a: Number, zeta: Number, terms: Optional[int] = None) -> Tuple[complex, int]:
    """
    Logarithmic series of psi(a, 1, zeta) and the number of terms summed.

    With terms=None the sum stops once past the peak term and the next term
    drops below PSI_REL_TOL relative to the partial sum.
    """
    a, zeta = complex(a), complex(zeta)
    if zeta == 0:
        raise SingularPointError("psi(a, 1, zeta) is singular at zeta = 0")
    if a == 0:
        return 1.0 + 0j, 0
    if _is_nonpositive_integer(a):
        raise SingularPointError(f"psi series is not available at a = {a}")
    log_zeta = log_upper_sheet(zeta)
    digamma_a = complex_digamma(a)
    digamma_one = -EULER_GAMMA
    coeff = 1.0 + 0j
    total = 0j
    limit = PSI_MAX_TERMS if terms is None else terms
    k = 0
    while k < limit:
        term = coeff * (log_zeta + digamma_a - 2.0 * digamma_one)
        total += term
        coeff *= (a + k) * zeta / ((k + 1) ** 2)
        digamma_a += 1.0 / (a + k)
        digamma_one += 1.0 / (k + 1)
        k += 1
        if terms is None and k > 2 * abs(zeta) and abs(term) < PSI_REL_TOL * abs(total):
            break
    else:
        if terms is None:
            logger.warning(f"psi series hit {PSI_MAX_TERMS} terms at zeta = {zeta}")
    return -total / complex_gamma(a), k


def psi_asymptotic(a: Number, zeta: Number, terms: int = 2) -> complex:
    """
    zeta^{-a} sum_{k<terms} (a)_k^2 / k! (-zeta)^{-k}; terms=2 gives
    zeta^{-a}(1 - a^2/zeta) with an O(|zeta|^{-2}) relative error.
    Valid for 0 <= arg zeta < 3 pi / 2 on the upper sheet.
    """
    a, zeta = complex(a), complex(zeta)
    if zeta == 0:
        raise SingularPointError("psi(a, 1, zeta) is singular at zeta = 0")
    total = 0j
    coeff = 1.0 + 0j
    for k in range(terms):
        total += coeff
        coeff *= -((a + k) ** 2) / ((k + 1) * zeta)
    return cmath.exp(-a * log_upper_sheet(zeta)) * total


def kummer_psi(a: Number, zeta: Number) -> complex:
    """Confluent hypergeometric psi(a, 1, zeta), series below |zeta| = 8, asymptotic above"""
    if abs(complex(zeta)) < PSI_CROSSOVER:
        return psi_series(a, zeta)[0]
    return psi_asymptotic(a, zeta)


# ========== ORACLE ==========

def load_gamma_oracle(path: Path = ORACLE_PATH) -> pd.DataFrame:
    """Fixture table z_re, z_im, gamma_re, gamma_im kept as decimal strings"""
    return pd.read_csv(path, dtype=str)


def regenerate_gamma_oracle(path: Path = ORACLE_PATH, points: Iterable[Number] = ORACLE_POINTS, dps: int = 30):
    import mpmath

    rows = []
    with mpmath.workdps(dps + 5):
        for z in points:
            z = complex(z)
            value = mpmath.gamma(mpmath.mpc(z.real, z.imag))
            rows.append({
                "z_re": repr(z.real),
                "z_im": repr(z.imag),
                "gamma_re": mpmath.nstr(value.real, dps),
                "gamma_im": mpmath.nstr(value.imag, dps),
            })
    frame = pd.DataFrame(rows, columns=["z_re", "z_im", "gamma_re", "gamma_im"])
    frame.to_csv(path, index=False, lineterminator="\n")
    logger.info(f"Wrote {len(rows)} Gamma oracle rows to {path}")
    return frame
