import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from steklov.errors import PolynomialError, SchemeError, WeightError
from steklov.polynomial_core import (
    ComplexPoly,
    GridFunction,
    complex_from_dict,
    complex_to_dict,
    eval_grid,
)

logger = logging.getLogger(__name__)

# |gamma| at or above this aborts instead of clamping
MODULUS_LIMIT = 1.0 - 1e-10
REAL_TOL = 1e-10
VANISHING_TOL = 1e-13
# rectangle-rule aliasing of a Bernstein-Szego weight decays like |root of Phi_k|^m
ALIASING_TOL = 1e-17
MAX_ALIASING_GRID = 2 ** 20


# ========== SCHEMES ==========

@dataclass(frozen=True)
class VerblunskyScheme:
    """Schur parameters gamma_0 .. gamma_{k-1}, all strictly inside the unit disk"""

    gamma: np.ndarray

    def __post_init__(self):
        gamma = np.atleast_1d(np.asarray(self.gamma, dtype=np.complex128))
        if gamma.ndim != 1:
            raise SchemeError(f"scheme must be one-dimensional, got shape {gamma.shape}")
        if len(gamma):
            moduli = np.abs(gamma)
            bad = np.flatnonzero(~(moduli < MODULUS_LIMIT))
            if len(bad):
                j = int(bad[0])
                raise SchemeError(f"|gamma_{j}| = {moduli[j]:.17g} is not below {MODULUS_LIMIT!r}")
        gamma.setflags(write=False)
        object.__setattr__(self, "gamma", gamma)

    @classmethod
    def empty(cls) -> "VerblunskyScheme":
        return cls(np.zeros(0, dtype=np.complex128))

    @classmethod
    def zeros(cls, k: int) -> "VerblunskyScheme":
        return cls(np.zeros(k, dtype=np.complex128))

    def __len__(self) -> int:
        return len(self.gamma)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return VerblunskyScheme(self.gamma[item])
        return complex(self.gamma[item])

    @property
    def rho(self) -> np.ndarray:
        return np.sqrt(1.0 - np.abs(self.gamma) ** 2)

    def norm_sq(self, k: int = None) -> float:
        """prod_{j<k} (1 - |gamma_j|^2), the squared norm of the monic Phi_k"""
        k = len(self) if k is None else k
        return float(np.prod(1.0 - np.abs(self.gamma[:k]) ** 2))

    def rho_product(self) -> float:
        return float(np.prod(self.rho))

    def is_real(self, tol: float = REAL_TOL) -> bool:
        return bool(np.all(np.abs(self.gamma.imag) <= tol))

    def real_part(self, tol: float = REAL_TOL) -> np.ndarray:
        if not self.is_real(tol):
            worst = float(np.max(np.abs(self.gamma.imag)))
            raise SchemeError(f"real Schur parameters required, largest imaginary part is {worst:.3e}")
        return self.gamma.real.copy()

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.gamma) ** 2)))

    def residual(self, other: "VerblunskyScheme") -> float:
        """Largest |gamma_j - other_j| with the shorter scheme padded by zeros"""
        k = max(len(self), len(other))
        a = np.zeros(k, dtype=np.complex128)
        b = np.zeros(k, dtype=np.complex128)
        a[: len(self)] = self.gamma
        b[: len(other)] = other.gamma
        return float(np.max(np.abs(a - b))) if k else 0.0

    def to_dict(self) -> Dict:
        return {"gamma": [complex_to_dict(g) for g in self.gamma]}

    @classmethod
    def from_dict(cls, data: Dict) -> "VerblunskyScheme":
        return cls(np.array([complex_from_dict(g) for g in data["gamma"]], dtype=np.complex128))


@dataclass(frozen=True)
class PolySystem:
    """Monic Phi_k, Phi_k^*, Psi_k, Psi_k^* and prod (1 - |gamma_j|^2)"""

    k: int
    phi: ComplexPoly
    phi_star: ComplexPoly
    psi: ComplexPoly
    psi_star: ComplexPoly
    norm_sq: float

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.norm_sq))

    def orthonormal(self) -> Tuple[ComplexPoly, ComplexPoly, ComplexPoly, ComplexPoly]:
        factor = 1.0 / self.norm
        return (
            self.phi.scale(factor),
            self.phi_star.scale(factor),
            self.psi.scale(factor),
            self.psi_star.scale(factor),
        )

    def to_dict(self) -> Dict:
        return {
            "phi": self.phi.to_dict(),
            "phi_star": self.phi_star.to_dict(),
            "psi": self.psi.to_dict(),
            "psi_star": self.psi_star.to_dict(),
            "norm_sq": self.norm_sq,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "PolySystem":
        phi = ComplexPoly.from_dict(data["phi"])
        return cls(
            k=phi.degree,
            phi=phi,
            phi_star=ComplexPoly.from_dict(data["phi_star"]),
            psi=ComplexPoly.from_dict(data["psi"]),
            psi_star=ComplexPoly.from_dict(data["psi_star"]),
            norm_sq=float(data["norm_sq"]),
        )


def concatenate_schemes(first: VerblunskyScheme, second: VerblunskyScheme) -> VerblunskyScheme:
    return VerblunskyScheme(np.concatenate([first.gamma, second.gamma]))


# ========== RECURSION ==========

def szego_step(p: np.ndarray, p_star: np.ndarray, g: complex) -> Tuple[np.ndarray, np.ndarray]:
    """One step of Phi_{n+1} = z Phi_n - conj(g) Phi_n^*, Phi_{n+1}^* = Phi_n^* - g z Phi_n"""
    z_p = np.concatenate([np.zeros(1, dtype=np.complex128), p])
    padded_star = np.concatenate([p_star, np.zeros(1, dtype=np.complex128)])
    return z_p - np.conj(g) * padded_star, padded_star - g * z_p


def szego_forward(s: VerblunskyScheme, k: int = None) -> PolySystem:
    """Advance both kinds of monic polynomials k steps from Phi_0 = Psi_0 = 1"""
    k = len(s) if k is None else k
    if k > len(s) or k < 0:
        raise SchemeError(f"cannot advance {k} steps with a scheme of length {len(s)}")
    one = np.ones(1, dtype=np.complex128)
    phi, phi_star = one, one.copy()
    psi, psi_star = one.copy(), one.copy()
    for g in s.gamma[:k]:
        phi, phi_star = szego_step(phi, phi_star, g)
        # second kind runs on -gamma
        psi, psi_star = szego_step(psi, psi_star, -g)
    return PolySystem(
        k=k,
        phi=ComplexPoly(phi, k),
        phi_star=ComplexPoly(phi_star, k),
        psi=ComplexPoly(psi, k),
        psi_star=ComplexPoly(psi_star, k),
        norm_sq=s.norm_sq(k),
    )


def transfer_matrix(s: VerblunskyScheme, k: int = None) -> List[List[ComplexPoly]]:
    """Product of [[z, -conj g_j], [-z g_j, 1]] for j = k-1 .. 0"""
    k = len(s) if k is None else k
    one, zero, z = ComplexPoly.constant(1.0), ComplexPoly.constant(0.0), ComplexPoly.monomial(1)
    a, b, c, d = one, zero, zero, one
    for g in s.gamma[:k]:
        a, b, c, d = (
            z * a - c.scale(np.conj(g)),
            z * b - d.scale(np.conj(g)),
            (z * a).scale(-g) + c,
            (z * b).scale(-g) + d,
        )
    return [[a, b], [c, d]]


def transfer_residual(s: VerblunskyScheme, k: int = None) -> float:
    """Compare the transfer-matrix action on [[1,1],[1,-1]] with szego_forward"""
    ps = szego_forward(s, k)
    (a, b), (c, d) = transfer_matrix(s, ps.k)
    return max(
        (a + b).coeff_residual(ps.phi),
        (a - b).coeff_residual(ps.psi),
        (c + d).coeff_residual(ps.phi_star),
        (d - c).coeff_residual(ps.psi_star),
    )


# ========== SCHEME TRANSFORMATIONS ==========

def double_scheme(alpha: VerblunskyScheme) -> VerblunskyScheme:
    """(a_0, .., a_{k-1}, -a_{k-1}, .., -a_0) for real parameters"""
    real = alpha.real_part()
    return VerblunskyScheme(np.concatenate([real, -real[::-1]]).astype(np.complex128))


def unit_phases(count: int, beta: float) -> np.ndarray:
    """e^{-i (j+1) beta} for j < count, exact when beta is a multiple of pi/2"""
    quarter = beta / (np.pi / 2)
    q = int(round(quarter))
    if abs(quarter - q) <= 1e-15 * max(1.0, abs(quarter)):
        cycle = np.array([1.0, -1j, -1.0, 1j], dtype=np.complex128)
        return cycle[(q * np.arange(1, count + 1)) % 4]
    return np.exp(-1j * beta * np.arange(1, count + 1))


def rotate_scheme(alpha: VerblunskyScheme, beta: float) -> VerblunskyScheme:
    """Schur parameters of the translated measure sigma(theta - beta)"""
    return VerblunskyScheme(alpha.gamma * unit_phases(len(alpha), beta))


# ========== IDENTITIES ==========

def wronskian_residual(ps: PolySystem) -> float:
    """Phi_k Psi_k^* + Phi_k^* Psi_k - 2 z^k prod(1 - |gamma_j|^2), largest coefficient"""
    lhs = ps.phi * ps.psi_star + ps.phi_star * ps.psi
    return lhs.coeff_residual(ComplexPoly.monomial(ps.k, 2.0 * ps.norm_sq))


def lemma2_residuals(alpha: VerblunskyScheme, division_tol: float = 1e-12) -> Tuple[float, float]:
    """Residuals of both doubling identities for real alpha of length k"""
    k = len(alpha)
    half = szego_forward(alpha, k)
    full = szego_forward(double_scheme(alpha), 2 * k)
    phi, phi_s, psi, psi_s = half.phi, half.phi_star, half.psi, half.psi_star
    numerator = phi_s * psi_s - phi_s * phi_s
    rhs_phi = phi * phi + phi * psi + numerator.divide_by_z(division_tol)
    z = ComplexPoly.monomial(1)
    rhs_star = phi_s * phi_s + phi_s * psi_s - z * phi * phi + z * phi * psi
    return (
        full.phi.scale(2.0).coeff_residual(rhs_phi),
        full.phi_star.scale(2.0).coeff_residual(rhs_star),
    )


def idi_residuals(alpha: VerblunskyScheme) -> Dict[str, float]:
    """Doubled scheme extended by a zero: shift identities and the closed form of 2 Phi_{2n+1}"""
    n = len(alpha)
    doubled = double_scheme(alpha)
    extended = concatenate_schemes(doubled, VerblunskyScheme.zeros(1))
    even = szego_forward(extended, 2 * n)
    odd = szego_forward(extended, 2 * n + 1)
    half = szego_forward(alpha, n)
    z = ComplexPoly.monomial(1)
    phi, phi_s, psi, psi_s = half.phi, half.phi_star, half.psi, half.psi_star
    closed_phi = z * phi * phi + z * phi * psi - phi_s * phi_s + phi_s * psi_s
    closed_star = phi_s * phi_s + phi_s * psi_s - z * phi * phi + z * phi * psi
    return {
        "shift_phi": odd.phi.coeff_residual(even.phi.shift_by_z()),
        "shift_phi_star": odd.phi_star.coeff_residual(even.phi_star),
        "shift_psi": odd.psi.coeff_residual(even.psi.shift_by_z()),
        "shift_psi_star": odd.psi_star.coeff_residual(even.psi_star),
        "closed_phi": odd.phi.scale(2.0).coeff_residual(closed_phi),
        "closed_phi_star": odd.phi_star.scale(2.0).coeff_residual(closed_star),
    }


def quatro_residual(ps: PolySystem, m: int) -> float:
    """conj(Phi^*) Psi^* + Phi^* conj(Psi^*) = 2 prod(1 - |gamma_j|^2) on the grid"""
    phi_s = eval_grid(ps.phi_star, m)
    psi_s = eval_grid(ps.psi_star, m)
    lhs = phi_s.conj() * psi_s + phi_s * psi_s.conj()
    return float(np.max(np.abs(lhs.values - 2.0 * ps.norm_sq)))


def normalization_residual(ps: PolySystem, m: int) -> float:
    """|int |phi_n^*|^{-2} dtheta - 2 pi| for the orthonormal phi_n^*"""
    modulus_sq = np.abs(eval_grid(ps.phi_star, m).values) ** 2 / ps.norm_sq
    return float(abs(2.0 * np.pi / m * np.sum(1.0 / modulus_sq) - 2.0 * np.pi))


# ========== WEIGHTS ==========

def root_modulus(ps: PolySystem) -> float:
    """Largest |z| over the zeros of Phi_k, 0 when k = 0"""
    if ps.k == 0:
        return 0.0
    roots = np.roots(ps.phi.coeffs[::-1])
    return float(np.max(np.abs(roots))) if len(roots) else 0.0


def bernstein_szego_grid(ps: PolySystem, minimum: int = 64, tol: float = ALIASING_TOL) -> int:
    """Smallest power-of-two grid, at least minimum, with |root of Phi_k|^m below tol"""
    m = 1 << max(2, (minimum - 1).bit_length())
    r = root_modulus(ps)
    if r > 0:
        needed = math.log(tol) / math.log(r) if r < 1.0 else math.inf
        while m < needed and m < MAX_ALIASING_GRID:
            m *= 2
        if m < needed:
            logger.warning(f"Phi_{ps.k} has a zero at modulus {r:.9f}; grid capped at {m}")
    return m


def bernstein_szego_weight(ps: PolySystem, m: int) -> GridFunction:
    """norm_sq / (2 pi |Phi_n^*|^2) on the grid"""
    if not ps.norm_sq > 0:
        raise WeightError(f"norm product {ps.norm_sq} is not positive")
    phi_s = eval_grid(ps.phi_star, m).values
    modulus = np.abs(phi_s)
    if np.min(modulus) < VANISHING_TOL:
        k = int(np.argmin(modulus))
        raise WeightError(f"Phi_{ps.k}^* vanishes at grid point {k} of {m}")
    return GridFunction(m, ps.norm_sq / (2.0 * np.pi * modulus ** 2))


def decouple_weight(ps: PolySystem, F_tilde: GridFunction, sigma_tilde_prime: GridFunction) -> GridFunction:
    """4 sigma~' / |phi_n + phi_n^* + F~ (phi_n^* - phi_n)|^2 with orthonormal phi_n"""
    m = F_tilde.m
    if sigma_tilde_prime.m != m:
        raise PolynomialError(f"cannot combine grids of sizes {m} and {sigma_tilde_prime.m}")
    if np.min(F_tilde.real) <= 0:
        k = int(np.argmin(F_tilde.real))
        raise WeightError(f"Re F~ = {F_tilde.real[k]:.3e} is not positive at grid point {k}")
    phi_o, phi_star_o, _, _ = ps.orthonormal()
    phi = eval_grid(phi_o, m).values
    phi_s = eval_grid(phi_star_o, m).values
    denominator = phi + phi_s + F_tilde.values * (phi_s - phi)
    modulus_sq = np.abs(denominator) ** 2
    if np.min(modulus_sq) < VANISHING_TOL ** 2:
        k = int(np.argmin(modulus_sq))
        raise WeightError(f"decoupling denominator vanishes at grid point {k} of {m}")
    return GridFunction(m, 4.0 * sigma_tilde_prime.real / modulus_sq)


def sum_rule_residual(w: GridFunction, s: VerblunskyScheme) -> float:
    """|exp((1/4 pi) int ln(2 pi w)) - prod rho_j| with the rectangle rule"""
    values = w.real
    if np.min(values) <= 0:
        k = int(np.argmin(values))
        raise WeightError(f"weight value {values[k]:.3e} at grid point {k} is not positive")
    lhs = np.exp(np.sum(np.log(2.0 * np.pi * values)) / (2.0 * w.m))
    return float(abs(lhs - s.rho_product()))


def norm_identity_residual(ps: PolySystem, w: GridFunction) -> float:
    """|int |Phi_k|^2 w dtheta - prod(1 - |gamma_j|^2)| by quadrature"""
    phi = eval_grid(ps.phi, w.m).values
    quadrature = 2.0 * np.pi / w.m * np.sum(np.abs(phi) ** 2 * w.real)
    return float(abs(quadrature - ps.norm_sq))
