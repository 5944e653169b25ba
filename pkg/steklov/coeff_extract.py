import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from steklov.config import MomentSource, Precision
from steklov.errors import ConfigError, ExtractionError, SingularPointError, WeightError
from steklov.polynomial_core import GridFunction, complex_from_dict, complex_to_dict, grid_thetas
from steklov.szego_engine import (
    MODULUS_LIMIT,
    PolySystem,
    VerblunskyScheme,
    szego_forward,
    szego_step,
    unit_phases,
)

logger = logging.getLogger(__name__)

HIGH_PRECISION_BITS = 128
NORMALIZATION_TOL = 1e-12
JUMP_TOL = 1e-15
# grid-to-moment-index ratio below which rectangle-rule moments alias
MIN_OVERSAMPLING = 8


# ========== FISHER-HARTWIG WEIGHT ==========

@dataclass(frozen=True)
class FHWeightSpec:
    """e^eps on the right half circle, e^-eps on the left, jumps at z = +-i"""

    epsilon: float

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 0.3:
            raise ConfigError(f"epsilon must lie in (0, 0.3], got {self.epsilon}")

    @property
    def z1(self) -> complex:
        return 1j

    @property
    def z2(self) -> complex:
        return -1j

    @property
    def beta1(self) -> complex:
        return -1j * self.epsilon / math.pi

    @property
    def beta2(self) -> complex:
        return 1j * self.epsilon / math.pi

    @property
    def mass(self) -> float:
        """Integral of the unnormalized weight over dtheta"""
        return 2.0 * math.pi * math.cosh(self.epsilon)


def fh_eval(spec: FHWeightSpec, theta):
    """Unnormalized weight; arcs are half-open, so theta = pi/2 takes e^-eps and 3 pi/2 takes e^eps"""
    t = np.mod(np.asarray(theta, dtype=np.float64), 2.0 * np.pi)
    right = (t < np.pi / 2) | (t >= 3.0 * np.pi / 2)
    values = np.where(right, math.exp(spec.epsilon), math.exp(-spec.epsilon))
    return float(values) if values.ndim == 0 else values


def fh_grid(spec: FHWeightSpec, m: int) -> GridFunction:
    """Probability-normalized f / (2 pi cosh eps) on the grid"""
    if m % 4 == 0:
        # arcs by index: k < m/4 or k >= 3m/4
        k = np.arange(m)
        right = (k < m // 4) | (k >= 3 * m // 4)
        values = np.where(right, math.exp(spec.epsilon), math.exp(-spec.epsilon))
    else:
        values = fh_eval(spec, grid_thetas(m))
    return GridFunction(m, values / spec.mass)


def away_from_jumps(m: int, radius: float) -> np.ndarray:
    """Mask of grid points whose angular distance to pi/2 and 3 pi/2 exceeds radius"""
    thetas = grid_thetas(m)
    mask = np.ones(m, dtype=bool)
    for jump in (np.pi / 2, 3.0 * np.pi / 2):
        distance = np.abs(np.angle(np.exp(1j * (thetas - jump))))
        mask &= distance > radius
    return mask


# ========== MOMENTS ==========

@dataclass(frozen=True)
class MomentSequence:
    """c_0 .. c_K of a probability measure, c_k = int e^{-ik theta} d mu"""

    c: np.ndarray
    source: MomentSource = MomentSource.EXPLICIT
    m: Optional[int] = None

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.c, dtype=np.complex128))
        if len(c) == 0 or abs(c[0] - 1.0) > NORMALIZATION_TOL:
            raise ExtractionError("moment sequence must start with c_0 = 1", index=0)
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    @property
    def K(self) -> int:
        return len(self.c) - 1

    def moment(self, k: int) -> complex:
        """c_k for any integer k through the Hermitian extension"""
        return complex(self.c[k]) if k >= 0 else complex(np.conj(self.c[-k]))

    def to_dict(self) -> Dict:
        return {"K": self.K, "c": [complex_to_dict(x) for x in self.c]}

    @classmethod
    def from_dict(cls, data: Dict) -> "MomentSequence":
        c = [complex_from_dict(x) for x in data["c"]]
        if len(c) != data["K"] + 1:
            raise ExtractionError(f"K={data['K']} but {len(c)} moments stored", index=len(c))
        return cls(np.array(c, dtype=np.complex128))


def fh_moments(spec: FHWeightSpec, K: int) -> MomentSequence:
    """Closed form 2 sinh(eps) sin(k pi/2) / (pi k cosh eps), c_0 = 1"""
    if K < 0:
        raise ConfigError(f"moment count must be nonnegative, got {K}")
    k = np.arange(1, K + 1)
    # sin(k pi / 2) exactly
    sines = np.array([0.0, 1.0, 0.0, -1.0])[k % 4]
    c = np.empty(K + 1, dtype=np.complex128)
    c[0] = 1.0
    c[1:] = 2.0 * math.tanh(spec.epsilon) * sines / (math.pi * k)
    return MomentSequence(c, source=MomentSource.CLOSED_FORM)


def generic_moments(w: GridFunction, K: int) -> MomentSequence:
    """Rectangle-rule moments of a nonnegative grid weight, normalized by its integral"""
    if w.m < MIN_OVERSAMPLING * K:
        raise WeightError(f"grid of size {w.m} is too coarse for {K} moments (need {MIN_OVERSAMPLING * K})")
    values = w.real
    if np.min(values) < 0:
        k = int(np.argmin(values))
        raise WeightError(f"weight value {values[k]:.3e} at grid point {k} is negative")
    spectrum = np.fft.fft(values)
    total = spectrum[0].real
    if not total > 0:
        raise WeightError(f"weight integral {2.0 * np.pi * total / w.m:.3e} is not positive")
    c = spectrum[: K + 1] / total
    c[0] = 1.0
    return MomentSequence(c, source=MomentSource.GRID, m=w.m)


def rotate_moments(mom: MomentSequence, beta: float) -> MomentSequence:
    """Moments of the translated measure mu(theta - beta): c_k -> e^{-ik beta} c_k"""
    c = np.array(mom.c)
    c[1:] = c[1:] * unit_phases(mom.K, beta)
    return MomentSequence(c, source=mom.source, m=mom.m)


# ========== EXTRACTION ==========

@dataclass(frozen=True)
class ExtractionResult:
    scheme: VerblunskyScheme
    source: MomentSource
    K: int
    N: int
    precision: Precision
    m: Optional[int] = None
    epsilon: Optional[float] = None
    extra: Dict = field(default_factory=dict)

    def provenance(self) -> Dict:
        return {
            "source": self.source.value,
            "m": self.m,
            "K": self.K,
            "N": self.N,
            "precision": self.precision.value,
            "epsilon": self.epsilon,
            **self.extra,
        }

    def to_dict(self) -> Dict:
        return {"provenance": self.provenance(), **self.scheme.to_dict()}

    @classmethod
    def from_dict(cls, data: Dict) -> "ExtractionResult":
        prov = data["provenance"]
        return cls(
            scheme=VerblunskyScheme.from_dict(data),
            source=MomentSource(prov["source"]),
            K=prov["K"],
            N=prov["N"],
            precision=Precision(prov["precision"]),
            m=prov.get("m"),
            epsilon=prov.get("epsilon"),
        )


def _check_count(mom: MomentSequence, N: int):
    if N < 0 or N > mom.K:
        raise ExtractionError(f"{N} parameters need moments up to c_{N}, only c_{mom.K} available", index=N)


def _extract_standard(mom: MomentSequence, N: int) -> np.ndarray:
    c = mom.c
    gamma = np.zeros(N, dtype=np.complex128)
    phi = np.ones(1, dtype=np.complex128)
    phi_star = np.ones(1, dtype=np.complex128)
    norm_sq = 1.0
    for k in range(N):
        products = np.conj(phi) * c[1 : k + 2]
        g = complex(math.fsum(products.real), math.fsum(products.imag)) / norm_sq
        if not abs(g) < MODULUS_LIMIT:
            raise ExtractionError(f"|gamma_{k}| = {abs(g):.17g} reached the unit circle", index=k)
        gamma[k] = g
        phi, phi_star = szego_step(phi, phi_star, g)
        norm_sq *= 1.0 - abs(g) ** 2
    return gamma


def _extract_high(mom: MomentSequence, N: int) -> np.ndarray:
    import mpmath

    gamma = np.zeros(N, dtype=np.complex128)
    with mpmath.workprec(HIGH_PRECISION_BITS):
        c = [mpmath.mpc(x.real, x.imag) for x in mom.c]
        zero = mpmath.mpc(0)
        phi = [mpmath.mpc(1)]
        phi_star = [mpmath.mpc(1)]
        norm_sq = mpmath.mpf(1)
        for k in range(N):
            g = mpmath.fsum(mpmath.conj(phi[j]) * c[j + 1] for j in range(k + 1)) / norm_sq
            if not abs(g) < MODULUS_LIMIT:
                raise ExtractionError(f"|gamma_{k}| = {mpmath.nstr(abs(g), 17)} reached the unit circle", index=k)
            gamma[k] = complex(g)
            z_phi = [zero] + phi
            padded_star = phi_star + [zero]
            phi = [a - mpmath.conj(g) * b for a, b in zip(z_phi, padded_star)]
            phi_star = [b - g * a for a, b in zip(z_phi, padded_star)]
            norm_sq *= 1 - abs(g) ** 2
    return gamma


def extract_verblunsky(mom: MomentSequence, N: int, precision: Precision = Precision.STANDARD) -> VerblunskyScheme:
    """
    Invert the Szego recursion at z = 0: gamma_k = sum_j conj(a_j) c_{j+1} / ||Phi_k||^2
    where a_j are the coefficients of Phi_k. Step k consumes c_{k+1}, so N <= K.
    """
    _check_count(mom, N)
    logger.debug(f"Extracting {N} Schur parameters from {mom.K + 1} moments ({precision.value})")
    if precision == Precision.HIGH:
        return VerblunskyScheme(_extract_high(mom, N))
    return VerblunskyScheme(_extract_standard(mom, N))


def extract(
    mom: MomentSequence,
    N: int,
    precision: Precision = Precision.STANDARD,
    epsilon: Optional[float] = None,
) -> ExtractionResult:
    scheme = extract_verblunsky(mom, N, precision)
    return ExtractionResult(
        scheme=scheme, source=mom.source, K=mom.K, N=N, precision=precision, m=mom.m, epsilon=epsilon
    )


def orthogonality_residual(mom: MomentSequence, scheme: VerblunskyScheme) -> float:
    """max_{j<N} |int Phi_N e^{-ij theta} d mu| computed from the moments"""
    N = len(scheme)
    if N > mom.K:
        raise ExtractionError(f"orthogonality of Phi_{N} needs c_{N}", index=N)
    coeffs = szego_forward(scheme).phi.coeffs
    worst = 0.0
    for j in range(N):
        # int z^l e^{-ij theta} d mu = c_{j-l}
        value = sum(coeffs[l] * mom.moment(j - l) for l in range(N + 1))
        worst = max(worst, abs(value))
    return worst


# ========== CARATHEODORY AND SZEGO FUNCTIONS ==========

def _cayley_log(z):
    """Principal ln((i - z)/(i + z)); raises at z = +-i"""
    z = np.asarray(z, dtype=np.complex128)
    if np.any(np.abs(z - 1j) < JUMP_TOL) or np.any(np.abs(z + 1j) < JUMP_TOL):
        raise SingularPointError("the two-arc weight functions are singular at z = +-i")
    return np.log((1j - z) / (1j + z))


def _scalar_or_array(values):
    return complex(values) if np.ndim(values) == 0 else values


def caratheodory_F(spec: FHWeightSpec, z):
    """-i (e^eps - e^-eps)/pi ln((i-z)/(i+z)) + cosh(eps)"""
    values = -2j * math.sinh(spec.epsilon) / math.pi * _cayley_log(z) + math.cosh(spec.epsilon)
    return _scalar_or_array(values)


def szego_D(spec: FHWeightSpec, z):
    """exp(eps/(pi i) ln((i-z)/(i+z))), D(0) = 1 and |D_+|^2 = f on the circle"""
    values = np.exp(spec.epsilon / (math.pi * 1j) * _cayley_log(z))
    return _scalar_or_array(values)


def caratheodory_series(mom: MomentSequence) -> np.ndarray:
    """Taylor coefficients 1, 2c_1, .., 2c_K of int (e^{i theta} + z)/(e^{i theta} - z) d mu"""
    series = 2.0 * np.array(mom.c)
    series[0] = 1.0
    return series


def second_kind_residual(spec: FHWeightSpec, ps: PolySystem) -> float:
    """Largest Taylor coefficient of F Phi_k^* - cosh(eps) Psi_k^* up to order k"""
    k = ps.k
    series = caratheodory_series(fh_moments(spec, k)) * math.cosh(spec.epsilon)
    product = np.convolve(series, ps.phi_star.coeffs)[: k + 1]
    difference = product - math.cosh(spec.epsilon) * ps.psi_star.coeffs
    return float(np.max(np.abs(difference)))


def szego_product(spec: FHWeightSpec) -> float:
    """exp((1/4 pi) int ln(2 pi w)) for the normalized two-arc weight"""
    return math.cosh(spec.epsilon) ** -0.5
