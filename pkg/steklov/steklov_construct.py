import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import linregress

from steklov.coeff_extract import (
    FHWeightSpec,
    away_from_jumps,
    extract_verblunsky,
    fh_moments,
    szego_D,
)
from steklov.config import EXCLUSION_RADIUS, MOMENT_SLACK, Precision
from steklov.errors import ConfigError, SchemeError, WeightError
from steklov.polynomial_core import GridFunction, eval_grid, grid_points
from steklov.special_fn import complex_gamma
from steklov.szego_engine import (
    VANISHING_TOL,
    VerblunskyScheme,
    decouple_weight,
    quatro_residual,
    rotate_scheme,
    szego_forward,
)

logger = logging.getLogger(__name__)

N_MIN = 16
# ratio drop tolerated between consecutive block sizes before a point is flagged
TREND_TOLERANCE = 0.05
I_POWERS = np.array([1.0, 1j, -1.0, -1j], dtype=np.complex128)


# ========== SCHEME ==========

@dataclass(frozen=True)
class SteklovScheme:
    """
    alpha_0..alpha_{n-1}, their sign-flipped reversal, a zero, then the
    alpha block rotated by pi. Entries past index 3n are zero.
    """

    n: int
    gamma: VerblunskyScheme
    epsilon: Optional[float] = None

    def __post_init__(self):
        n, g = self.n, self.gamma.gamma
        if n < 1:
            raise SchemeError(f"block size must be positive, got {n}")
        if len(g) != 3 * n + 1:
            raise SchemeError(f"block size {n} needs {3 * n + 1} parameters, got {len(g)}")
        if g[2 * n] != 0:
            raise SchemeError(f"gamma_{2 * n} = {g[2 * n]} must vanish")
        if np.any(g[n : 2 * n] != -g[n - 1 :: -1]):
            raise SchemeError("second block is not the sign-flipped reversal of the first")
        signs = -((-1.0) ** np.arange(n))
        if np.any(g[2 * n + 1 :] != signs * g[:n]):
            raise SchemeError("third block is not the first block rotated by pi")

    def segments(self) -> Dict[str, range]:
        n = self.n
        return {
            "alpha": range(0, n),
            "reversed": range(n, 2 * n),
            "zero": range(2 * n, 2 * n + 1),
            "rotated": range(2 * n + 1, 3 * n + 1),
        }

    def full_scheme(self, length: Optional[int] = None) -> VerblunskyScheme:
        """The stored 3n+1 parameters, zero-padded to length if given"""
        if length is None or length <= len(self.gamma):
            return self.gamma if length is None else self.gamma[:length]
        padded = np.zeros(length, dtype=np.complex128)
        padded[: len(self.gamma)] = self.gamma.gamma
        return VerblunskyScheme(padded)

    @property
    def head(self) -> VerblunskyScheme:
        """gamma_0 .. gamma_{2n}, the Bernstein-Szego part"""
        return self.gamma[: 2 * self.n + 1]

    def to_dict(self) -> Dict:
        return {"n": self.n, "epsilon": self.epsilon, **self.gamma.to_dict()}

    @classmethod
    def from_dict(cls, data: Dict) -> "SteklovScheme":
        return cls(n=data["n"], gamma=VerblunskyScheme.from_dict(data), epsilon=data.get("epsilon"))


def build_scheme(alpha: VerblunskyScheme, n: int, epsilon: Optional[float] = None) -> SteklovScheme:
    if n < 1:
        raise ConfigError(f"block size must be positive, got {n}")
    if len(alpha) < n:
        raise SchemeError(f"block size {n} needs {n} parameters, got {len(alpha)}")
    block = VerblunskyScheme(alpha[:n].real_part())
    rotated = rotate_scheme(block, math.pi).gamma
    gamma = np.concatenate([block.gamma, -block.gamma[::-1], np.zeros(1, dtype=np.complex128), rotated])
    return SteklovScheme(n=n, gamma=VerblunskyScheme(gamma), epsilon=epsilon)


# ========== MAIN TERMS ==========

@lru_cache(maxsize=32)
def gamma_ratios(epsilon: float) -> Tuple[complex, complex]:
    """Gamma(1 - i eps/pi)/Gamma(i eps/pi) and its conjugate partner"""
    y = epsilon / math.pi
    return (
        complex_gamma(1.0 - 1j * y) / complex_gamma(1j * y),
        complex_gamma(1.0 + 1j * y) / complex_gamma(-1j * y),
    )


def l4_main_terms(count: int, epsilon: float) -> np.ndarray:
    """Leading asymptotics of the first count Schur parameters of the two-arc weight"""
    a, b = gamma_ratios(epsilon)
    y = epsilon / math.pi
    k = np.arange(1, count + 1)
    growth = np.exp(2j * y * np.log(2.0 * k))
    parity = np.where(k % 2, -1.0, 1.0)
    return -I_POWERS[k % 4] / k * (growth * a + parity * b / growth)


def l4_main_term(j: int, epsilon: float) -> complex:
    return complex(l4_main_terms(j + 1, epsilon)[j])


def qq1_main_term(j: int, n: int, epsilon: float) -> complex:
    """Main term of gamma_j in the constructed scheme, by segment"""
    if j < 0:
        raise ConfigError(f"index must be nonnegative, got {j}")
    if j < n:
        return l4_main_term(j, epsilon)
    if j < 2 * n:
        return -l4_main_term(2 * n - 1 - j, epsilon)
    if j == 2 * n or j > 3 * n:
        return 0j
    return (-1) ** (j - 2 * n) * l4_main_term(j - 2 * n - 1, epsilon)


@dataclass(frozen=True)
class AsymptoticDescriptor:
    epsilon: float
    main_term: Callable[[int], complex]
    remainder_budget: Optional[float] = None

    @property
    def beta1(self) -> complex:
        return -1j * self.epsilon / math.pi

    @property
    def beta2(self) -> complex:
        return 1j * self.epsilon / math.pi

    @property
    def z1(self) -> complex:
        return 1j

    @property
    def z2(self) -> complex:
        return -1j

    def modulus_bound(self, j: int) -> float:
        return 2.0 * self.epsilon / (math.pi * (j + 1))


def asymptotic_descriptor(epsilon: float, remainder_budget: Optional[float] = None) -> AsymptoticDescriptor:
    return AsymptoticDescriptor(
        epsilon=epsilon,
        main_term=lambda j: l4_main_term(j, epsilon),
        remainder_budget=remainder_budget,
    )


@dataclass
class ResidualReport:
    epsilon: float
    j_min: int
    j_max: int
    C_fit: float
    slope_fit: float
    intercept: float
    excluded: List[int]
    l2_norm: float

    def to_dict(self) -> Dict:
        return {
            "epsilon": self.epsilon,
            "window": [self.j_min, self.j_max],
            "C_fit": self.C_fit,
            "slope_fit": self.slope_fit,
            "intercept": self.intercept,
            "excluded": self.excluded,
            "l2_norm": self.l2_norm,
        }


def residuals(extracted: VerblunskyScheme, epsilon: float) -> np.ndarray:
    """gamma_j minus the main term, for every extracted index"""
    return extracted.gamma - l4_main_terms(len(extracted), epsilon)


def residual_report(
    extracted: VerblunskyScheme, epsilon: float, j_window: Tuple[int, int] = (32, 512)
) -> ResidualReport:
    """Log-log fit of |r_j| against j+1 over the inclusive window, plus C_fit = max |r_j| (j+1)^2"""
    j_min, j_max = j_window
    j_max = min(j_max, len(extracted) - 1)
    if j_min > j_max or j_min < 0:
        raise ConfigError(f"residual window [{j_min}, {j_window[1]}] is empty for {len(extracted)} parameters")
    j = np.arange(j_min, j_max + 1)
    r = np.abs(residuals(extracted, epsilon)[j_min : j_max + 1])
    keep = r > 0
    excluded = [int(x) for x in j[~keep]]
    if excluded:
        logger.info(f"Excluded {len(excluded)} exactly vanishing residuals from the fit")
    if np.count_nonzero(keep) < 2:
        raise ConfigError(f"residual window [{j_min}, {j_max}] has fewer than two nonzero residuals")
    fit = linregress(np.log(j[keep] + 1.0), np.log(r[keep]))
    return ResidualReport(
        epsilon=epsilon,
        j_min=j_min,
        j_max=j_max,
        C_fit=float(np.max(r * (j + 1.0) ** 2)),
        slope_fit=float(fit.slope),
        intercept=float(fit.intercept),
        excluded=excluded,
        l2_norm=extracted.l2_norm(),
    )


# ========== CONSTRUCTION ==========

def antipodal_caratheodory(alpha: VerblunskyScheme, n: int, m: int) -> Tuple[GridFunction, VerblunskyScheme]:
    """Psi_n^*(-z)/Phi_n^*(-z) on the grid, with the parameters of its measure"""
    half = szego_forward(alpha, n)
    phi_star = eval_grid(half.phi_star, m).reflect()
    psi_star = eval_grid(half.psi_star, m).reflect()
    modulus = np.abs(phi_star.values)
    if np.min(modulus) < VANISHING_TOL:
        k = int(np.argmin(modulus))
        raise WeightError(f"Phi_{n}^*(-z) vanishes at grid point {k} of {m}")
    return psi_star / phi_star, rotate_scheme(alpha[:n], math.pi)


@dataclass
class ConstructionResult:
    n: int
    m: int
    scheme: SteklovScheme
    weight: GridFunction
    integral: float
    steklov_min: float
    caratheodory_mass: float
    phi_sup: float

    def report(self) -> Dict:
        return {
            "n": self.n,
            "m": self.m,
            "epsilon": self.scheme.epsilon,
            "integral": self.integral,
            "steklov_min": self.steklov_min,
            "caratheodory_mass": self.caratheodory_mass,
            "phi_sup": self.phi_sup,
        }


def steklov_weight(scheme: SteklovScheme, alpha: VerblunskyScheme, m: int) -> ConstructionResult:
    """Decouple the Bernstein-Szego head gamma_0..gamma_{2n} from the pi-rotated alpha block"""
    n = scheme.n
    if m < 16 * (2 * n + 1) or m % 2:
        raise ConfigError(f"grid size {m} is too small or odd for block size {n}")
    F_tilde, _ = antipodal_caratheodory(alpha, n, m)
    if np.min(F_tilde.real) <= 0:
        k = int(np.argmin(F_tilde.real))
        raise WeightError(f"Re F~ = {F_tilde.real[k]:.3e} at grid point {k}: not a Caratheodory function")
    sigma_tilde = GridFunction(m, F_tilde.real / (2.0 * math.pi))
    head = szego_forward(scheme.head)
    weight = decouple_weight(head, F_tilde, sigma_tilde)
    phi = eval_grid(head.orthonormal()[0], m).values
    result = ConstructionResult(
        n=n,
        m=m,
        scheme=scheme,
        weight=weight,
        integral=weight.integral().real,
        steklov_min=float(2.0 * math.pi * np.min(weight.real)),
        caratheodory_mass=float(np.mean(F_tilde.real)),
        phi_sup=float(np.max(np.abs(phi))),
    )
    logger.info(f"Constructed n={n}: integral={result.integral:.12f}, 2 pi min w={result.steklov_min:.6f}")
    return result


# ========== SUITES ==========

def _fh_alpha(epsilon: float, count: int, precision: Precision = Precision.STANDARD) -> VerblunskyScheme:
    return extract_verblunsky(fh_moments(FHWeightSpec(epsilon), count + MOMENT_SLACK), count, precision)


def flag_trend(ns: Sequence[int], values: Sequence[float], tolerance: float = TREND_TOLERANCE) -> List[int]:
    """Block sizes after which the next value drops by more than tolerance"""
    flagged = []
    for i in range(len(ns) - 1):
        if values[i + 1] < (1.0 - tolerance) * values[i]:
            flagged.append(int(ns[i]))
    return flagged


def _check_block_sizes(n_list: Sequence[int]) -> List[int]:
    ns = sorted(set(int(n) for n in n_list))
    if not ns or ns[0] < 2:
        raise ConfigError(f"block sizes must be at least 2 for ln n, got {list(n_list)}")
    if ns[0] < N_MIN:
        logger.warning(f"Block size {ns[0]} is below {N_MIN}; expect preasymptotic behaviour")
    return ns


@dataclass
class GrowthRow:
    n: int
    sup_phi: float
    log_n: float
    ratio: float
    duo_sup: float
    bound_margin: float


@dataclass
class GrowthReport:
    epsilon: float
    m: int
    rows: List[GrowthRow]
    flagged: List[int] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([vars(r) for r in self.rows])

    @property
    def min_ratio(self) -> float:
        return min(r.ratio for r in self.rows)

    def log_slope(self, values: Sequence[float]) -> float:
        """Least-squares slope of values against ln n"""
        if len(self.rows) < 2:
            raise ConfigError(f"a slope against ln n needs two block sizes, got {[r.n for r in self.rows]}")
        return float(linregress([r.log_n for r in self.rows], values).slope)

    @property
    def sup_slope(self) -> float:
        return self.log_slope([r.sup_phi for r in self.rows])

    @property
    def duo_slope(self) -> float:
        return self.log_slope([r.duo_sup for r in self.rows])


def growth_report(
    n_list: Sequence[int],
    epsilon: float,
    m: int,
    alpha: Optional[VerblunskyScheme] = None,
) -> GrowthReport:
    """sup |phi_{2n+1}| against ln n, and the pointwise bound behind it"""
    ns = _check_block_sizes(n_list)
    if alpha is None:
        alpha = _fh_alpha(epsilon, ns[-1])
    z = grid_points(m)
    rows = []
    for n in ns:
        head = szego_forward(build_scheme(alpha, n, epsilon).head)
        phi_odd = np.abs(eval_grid(head.phi, m).values)
        half = szego_forward(alpha, n)
        phi = eval_grid(half.phi, m).values
        duo = np.abs(
            eval_grid(half.phi_star, m).values * eval_grid(half.psi_star, m).values
            + z * phi * eval_grid(half.psi, m).values
        )
        # 2|Phi_{2n+1}| >= |Phi^* Psi^* + z Phi Psi| - 2|Phi_n|^2 on the circle
        margin = 2.0 * phi_odd - duo + 2.0 * np.abs(phi) ** 2
        sup_phi = float(np.max(np.abs(eval_grid(head.orthonormal()[0], m).values)))
        rows.append(
            GrowthRow(
                n=n,
                sup_phi=sup_phi,
                log_n=math.log(n),
                ratio=sup_phi / math.log(n),
                duo_sup=float(np.max(duo)),
                bound_margin=float(np.min(margin)),
            )
        )
        logger.info(f"Growth n={n}: sup|phi_2n+1|={sup_phi:.6f}, ratio={rows[-1].ratio:.6f}")
    flagged = flag_trend(ns, [r.ratio for r in rows])
    if flagged:
        logger.warning(f"Growth ratio drops after n in {flagged}; treating as preasymptotic")
    return GrowthReport(epsilon=epsilon, m=m, rows=rows, flagged=flagged)


@dataclass
class L1Row:
    n: int
    phi_star_min: float
    phi_star_max: float
    duo_sup: float
    duo_ratio: float
    antipodal_sup: float
    quatro: float
    szego_gap: float
    psi_star_sup: float
    psi_star_ratio: float

    @property
    def phi_star_spread(self) -> float:
        return self.phi_star_max / self.phi_star_min


def lemma_l1_row(
    alpha: VerblunskyScheme,
    n: int,
    m: int,
    epsilon: float,
    exclusion_radius: float = EXCLUSION_RADIUS,
) -> L1Row:
    half = szego_forward(alpha, n)
    z = grid_points(m)
    phi = eval_grid(half.phi, m)
    phi_star = eval_grid(half.phi_star, m)
    psi = eval_grid(half.psi, m)
    psi_star = eval_grid(half.psi_star, m)
    modulus = np.abs(phi_star.values)
    duo = np.abs(phi_star.values * psi_star.values + z * phi.values * psi.values)
    ratio = psi_star / phi_star
    antipodal = np.abs((ratio + ratio.reflect()).values)
    mask = away_from_jumps(m, exclusion_radius)
    d_modulus = np.abs(szego_D(FHWeightSpec(epsilon), z[mask]))
    psi_sup = float(np.max(np.abs(psi_star.values)))
    return L1Row(
        n=n,
        phi_star_min=float(np.min(modulus)),
        phi_star_max=float(np.max(modulus)),
        duo_sup=float(np.max(duo)),
        duo_ratio=float(np.max(duo)) / math.log(n),
        antipodal_sup=float(np.max(antipodal)),
        quatro=quatro_residual(half, m),
        szego_gap=float(np.max(np.abs(modulus[mask] * d_modulus - 1.0))),
        psi_star_sup=psi_sup,
        psi_star_ratio=psi_sup / (epsilon * math.log(n)),
    )


@dataclass
class L1Report:
    epsilon: float
    m: int
    exclusion_radius: float
    rows: List[L1Row]
    flagged: List[int] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame([vars(r) for r in self.rows])
        frame["phi_star_spread"] = [r.phi_star_spread for r in self.rows]
        return frame


def lemma_l1_suite(
    alpha: VerblunskyScheme,
    n_list: Sequence[int],
    m: int,
    epsilon: float,
    exclusion_radius: float = EXCLUSION_RADIUS,
) -> L1Report:
    """Boundedness of Phi_n^*, growth of the mixed product, antipodal ratio and Szego comparison"""
    ns = _check_block_sizes(n_list)
    if len(alpha) < ns[-1]:
        raise SchemeError(f"block size {ns[-1]} needs {ns[-1]} parameters, got {len(alpha)}")
    rows = [lemma_l1_row(alpha, n, m, epsilon, exclusion_radius) for n in ns]
    gaps = [r.szego_gap for r in rows]
    # gap should shrink: flag any increase
    flagged = [int(ns[i]) for i in range(len(ns) - 1) if gaps[i + 1] > gaps[i]]
    if flagged:
        logger.warning(f"Szego comparison gap grows after n in {flagged}")
    return L1Report(epsilon=epsilon, m=m, exclusion_radius=exclusion_radius, rows=rows, flagged=flagged)
