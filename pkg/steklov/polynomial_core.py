import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from steklov.errors import PolynomialError

logger = logging.getLogger(__name__)

Number = Union[complex, float, int]

DEFAULT_MIN_GRID = 4096
OVERSAMPLING = 16


class PolyOp(str, Enum):
    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    SCALE = "scale"
    SHIFT_BY_Z = "shift_by_z"


# ========== POLYNOMIALS ==========

@dataclass(frozen=True)
class ComplexPoly:
    """Dense complex polynomial, ascending powers, explicit declared degree"""

    coeffs: np.ndarray
    degree: int

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if coeffs.ndim != 1 or len(coeffs) != self.degree + 1:
            raise PolynomialError(
                f"coeffs length {coeffs.shape} does not match declared degree {self.degree}"
            )
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_coeffs(cls, coeffs, degree: Optional[int] = None) -> "ComplexPoly":
        coeffs = np.asarray(coeffs, dtype=np.complex128).ravel()
        if len(coeffs) == 0:
            coeffs = np.zeros(1, dtype=np.complex128)
        if degree is None:
            degree = len(coeffs) - 1
        if degree + 1 > len(coeffs):
            coeffs = np.concatenate([coeffs, np.zeros(degree + 1 - len(coeffs), dtype=np.complex128)])
        elif degree + 1 < len(coeffs):
            if np.any(coeffs[degree + 1:] != 0):
                raise PolynomialError(f"nonzero coefficients beyond declared degree {degree}")
            coeffs = coeffs[: degree + 1]
        return cls(coeffs=coeffs, degree=degree)

    @classmethod
    def constant(cls, value: Number = 1.0) -> "ComplexPoly":
        return cls.from_coeffs([value])

    @classmethod
    def monomial(cls, k: int, value: Number = 1.0) -> "ComplexPoly":
        coeffs = np.zeros(k + 1, dtype=np.complex128)
        coeffs[k] = value
        return cls(coeffs=coeffs, degree=k)

    @property
    def actual_degree(self) -> int:
        nonzero = np.flatnonzero(self.coeffs)
        return int(nonzero[-1]) if len(nonzero) else 0

    def padded(self, degree: int) -> np.ndarray:
        if degree < self.degree:
            if np.any(self.coeffs[degree + 1:] != 0):
                raise PolynomialError(f"cannot pad degree {self.degree} polynomial down to {degree}")
            return self.coeffs[: degree + 1].copy()
        out = np.zeros(degree + 1, dtype=np.complex128)
        out[: self.degree + 1] = self.coeffs
        return out

    def __add__(self, other: "ComplexPoly") -> "ComplexPoly":
        return poly_arith(self, other, PolyOp.ADD)

    def __sub__(self, other: "ComplexPoly") -> "ComplexPoly":
        return poly_arith(self, other, PolyOp.SUB)

    def __mul__(self, other: "ComplexPoly") -> "ComplexPoly":
        return poly_arith(self, other, PolyOp.MUL)

    def __neg__(self) -> "ComplexPoly":
        return self.scale(-1.0)

    def scale(self, factor: Number) -> "ComplexPoly":
        return poly_arith(self, None, PolyOp.SCALE, factor=factor)

    def shift_by_z(self) -> "ComplexPoly":
        return poly_arith(self, None, PolyOp.SHIFT_BY_Z)

    def divide_by_z(self, tol: float = 0.0) -> "ComplexPoly":
        """Exact division by z; the constant coefficient must vanish"""
        if abs(self.coeffs[0]) > tol:
            raise PolynomialError(f"constant term {self.coeffs[0]} prevents division by z")
        if self.degree == 0:
            return ComplexPoly.constant(0.0)
        return ComplexPoly(coeffs=self.coeffs[1:].copy(), degree=self.degree - 1)

    def __call__(self, z):
        return horner(self.coeffs, z)

    def coeff_residual(self, other: "ComplexPoly") -> float:
        """Largest coefficient modulus of self - other"""
        d = max(self.degree, other.degree)
        return float(np.max(np.abs(self.padded(d) - other.padded(d))))

    def is_real(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.coeffs.imag) <= tol))

    def to_dict(self) -> Dict:
        return {
            "degree": self.degree,
            "coeffs": [complex_to_dict(c) for c in self.coeffs],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "ComplexPoly":
        return cls.from_coeffs([complex_from_dict(c) for c in data["coeffs"]], degree=int(data["degree"]))


def complex_to_dict(value: Number) -> Dict[str, float]:
    value = complex(value)
    return {"re": float(value.real), "im": float(value.imag)}


def complex_from_dict(data: Dict[str, float]) -> complex:
    return complex(float(data["re"]), float(data.get("im", 0.0)))


def horner(coeffs: np.ndarray, z):
    """Evaluate ascending-power coefficients at z (scalar or array)"""
    z = np.asarray(z, dtype=np.complex128)
    acc = np.full(z.shape, coeffs[-1], dtype=np.complex128)
    for c in coeffs[-2::-1]:
        acc = acc * z + c
    if acc.ndim == 0:
        return complex(acc)
    return acc


def star(p: ComplexPoly, n: int) -> ComplexPoly:
    """P_n^*(z) = z^n conj(P_n(1/conj z)): reverse and conjugate at order n"""
    if n < p.actual_degree:
        raise PolynomialError(f"star order {n} is smaller than the degree {p.actual_degree} of the polynomial")
    coeffs = p.padded(n)
    return ComplexPoly(coeffs=np.conj(coeffs[::-1]), degree=n)


def poly_arith(
    a: ComplexPoly,
    b: Optional[ComplexPoly],
    op: PolyOp,
    factor: Number = 1.0,
    degree: Optional[int] = None,
) -> ComplexPoly:
    """Exact coefficient arithmetic; the caller may override the declared degree"""
    op = PolyOp(op)
    if op in (PolyOp.ADD, PolyOp.SUB):
        d = max(a.degree, b.degree)
        left, right = a.padded(d), b.padded(d)
        coeffs = left + right if op == PolyOp.ADD else left - right
    elif op == PolyOp.MUL:
        d = a.degree + b.degree
        # quadratic convolution, fixed summation order
        coeffs = np.convolve(a.coeffs, b.coeffs)
    elif op == PolyOp.SCALE:
        d = a.degree
        coeffs = a.coeffs * complex(factor)
    else:
        d = a.degree + 1
        coeffs = np.concatenate([np.zeros(1, dtype=np.complex128), a.coeffs])
    result = ComplexPoly(coeffs=coeffs, degree=d)
    if degree is not None and degree != d:
        return ComplexPoly.from_coeffs(result.padded(max(degree, result.actual_degree)), degree=degree)
    return result


# ========== GRID FUNCTIONS ==========

def grid_points(m: int) -> np.ndarray:
    if m < 1:
        raise PolynomialError(f"grid size must be positive, got {m}")
    return np.exp(2j * np.pi * np.arange(m) / m)


def grid_thetas(m: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(m) / m


def default_grid_size(degree: int) -> int:
    return max(DEFAULT_MIN_GRID, OVERSAMPLING * degree)


@dataclass(frozen=True)
class GridFunction:
    """Complex samples at theta_k = 2 pi k / m"""

    m: int
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        if self.m < 1 or values.shape != (self.m,):
            raise PolynomialError(f"grid of size {self.m} cannot hold values of shape {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, func: Callable[[np.ndarray], np.ndarray], m: int) -> "GridFunction":
        return cls(m=m, values=np.asarray(func(grid_thetas(m)), dtype=np.complex128))

    @classmethod
    def constant(cls, value: Number, m: int) -> "GridFunction":
        return cls(m=m, values=np.full(m, value, dtype=np.complex128))

    @property
    def thetas(self) -> np.ndarray:
        return grid_thetas(self.m)

    @property
    def points(self) -> np.ndarray:
        return grid_points(self.m)

    def _check(self, other: "GridFunction"):
        if not isinstance(other, GridFunction):
            return
        if other.m != self.m:
            raise PolynomialError(f"cannot combine grids of sizes {self.m} and {other.m}")

    def _values_of(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return other.values
        return other

    def __add__(self, other) -> "GridFunction":
        return GridFunction(self.m, self.values + self._values_of(other))

    def __sub__(self, other) -> "GridFunction":
        return GridFunction(self.m, self.values - self._values_of(other))

    def __mul__(self, other) -> "GridFunction":
        return GridFunction(self.m, self.values * self._values_of(other))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "GridFunction":
        return GridFunction(self.m, self.values / self._values_of(other))

    def __abs__(self) -> "GridFunction":
        return GridFunction(self.m, np.abs(self.values))

    def conj(self) -> "GridFunction":
        return GridFunction(self.m, np.conj(self.values))

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    def reflect(self) -> "GridFunction":
        """Values at -z, i.e. theta + pi"""
        if self.m % 2:
            raise PolynomialError(f"antipodal reflection needs an even grid, got m={self.m}")
        return GridFunction(self.m, np.roll(self.values, -self.m // 2))

    def integral(self) -> complex:
        """Periodic rectangle rule for the integral over [0, 2 pi)"""
        return complex(2.0 * np.pi / self.m * np.sum(self.values))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"theta": self.thetas, "re": self.values.real, "im": self.values.imag})


@dataclass(frozen=True)
class GridStats:
    sup_modulus: float
    min_modulus: float
    mean: complex
    integral_mod_sq: float

    def to_dict(self) -> Dict:
        return {
            "sup_modulus": self.sup_modulus,
            "min_modulus": self.min_modulus,
            "mean": complex_to_dict(self.mean),
            "integral_mod_sq": self.integral_mod_sq,
        }


def eval_grid(p: ComplexPoly, m: int) -> GridFunction:
    """Horner evaluation of p at the m-th roots of unity"""
    return GridFunction(m=m, values=horner(p.coeffs, grid_points(m)))


def grid_stats(g: GridFunction) -> GridStats:
    modulus = np.abs(g.values)
    return GridStats(
        sup_modulus=float(np.max(modulus)),
        min_modulus=float(np.min(modulus)),
        mean=complex(np.mean(g.values)),
        integral_mod_sq=float(2.0 * np.pi / g.m * np.sum(modulus ** 2)),
    )


def sup_on_refined(p: ComplexPoly, m: int, doublings: int = 3) -> List[float]:
    """Sup modulus of p on nested grids m, 2m, 4m, ..."""
    sups = []
    for level in range(doublings + 1):
        sups.append(grid_stats(eval_grid(p, m * 2 ** level)).sup_modulus)
    return sups


def write_grid_csv(g: GridFunction, path, metadata: Optional[Dict[str, str]] = None):
    """GridFunction CSV: header theta,re,im with 17 significant digits"""
    write_frame_csv(g.to_frame(), path, metadata)


def write_frame_csv(frame: pd.DataFrame, path, metadata: Optional[Dict[str, str]] = None):
    with open(path, "w", newline="") as fh:
        for key, value in sorted((metadata or {}).items()):
            fh.write(f"# {key}={value}\n")
        frame.to_csv(fh, index=False, float_format="%.17g", lineterminator="\n")


def read_grid_csv(path) -> GridFunction:
    frame = pd.read_csv(path, comment="#", float_precision="round_trip")
    values = frame["re"].to_numpy() + 1j * frame["im"].to_numpy()
    return GridFunction(m=len(values), values=values)
