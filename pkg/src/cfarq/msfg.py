"""Matrix signal-flow graph algebra with first-derivative tracking.

Branch gains are square-matrix-valued functions of a scalar z.  Only the
value and first derivative at a point are ever needed (the generating
functions downstream are evaluated at z = 1), so gains are computed with
dual numbers: pairs (value, derivative) propagated through the product and
chain rules rather than symbolically.

The three reduction equivalences -- series, parallel, and self-loop -- are
exposed as combinators on gains.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "SingularityError",
    "NormalizationError",
    "Dual",
    "DualMatrix",
    "MatrixGain",
    "series",
    "parallel",
    "self_loop",
    "pgf_stats",
]

# A matrix is treated as numerically singular past this condition number.
CONDITION_LIMIT = 1e12


class SingularityError(ArithmeticError):
    """Raised when a self-loop inverse does not exist or cannot be trusted."""


class NormalizationError(ArithmeticError):
    """Raised when a generating function fails to sum to one at z = 1."""


@dataclass(frozen=True)
class Dual:
    """Scalar carrying its first derivative."""

    val: float
    der: float = 0.0

    def __add__(self, other: "Dual") -> "Dual":
        return Dual(self.val + other.val, self.der + other.der)

    def __mul__(self, other: "Dual") -> "Dual":
        return Dual(self.val * other.val, self.der * other.val + self.val * other.der)

    def __pow__(self, n: float) -> "Dual":
        if n < 0:
            raise ValueError("negative powers not supported")
        if n == 0:
            return Dual(1.0, 0.0)
        return Dual(self.val**n, n * self.val ** (n - 1) * self.der)


@dataclass(frozen=True)
class DualMatrix:
    """Square matrix carrying its elementwise first derivative."""

    val: np.ndarray
    der: np.ndarray

    @classmethod
    def constant(cls, m: np.ndarray) -> "DualMatrix":
        m = np.asarray(m, dtype=float)
        return cls(m, np.zeros_like(m))

    @property
    def dim(self) -> int:
        return self.val.shape[0]

    def __add__(self, other: "DualMatrix") -> "DualMatrix":
        return DualMatrix(self.val + other.val, self.der + other.der)

    def __matmul__(self, other: "DualMatrix") -> "DualMatrix":
        return DualMatrix(
            self.val @ other.val,
            self.der @ other.val + self.val @ other.der,
        )

    def scale(self, s: Dual) -> "DualMatrix":
        return DualMatrix(s.val * self.val, s.der * self.val + s.val * self.der)

    def mpow(self, n: int) -> "DualMatrix":
        if n < 0:
            raise ValueError("negative matrix powers not supported")
        out = DualMatrix.constant(np.eye(self.dim))
        base = self
        while n:
            if n & 1:
                out = out @ base
            base = base @ base
            n >>= 1
        return out

    def inverse_of_identity_minus(self) -> "DualMatrix":
        """(I - M)^{-1} with derivative (I-M)^{-1} M' (I-M)^{-1}."""
        eye = np.eye(self.dim)
        gap = eye - self.val
        if np.linalg.cond(gap) > CONDITION_LIMIT:
            raise SingularityError("I - gain is numerically singular at the evaluation point")
        # The series interpretation of a self-loop only converges when the
        # loop gain is a strict contraction.
        rho = max(abs(np.linalg.eigvals(self.val)))
        if rho >= 1.0:
            raise SingularityError(f"self-loop gain has spectral radius {rho:.6g} >= 1")
        inv = np.linalg.solve(gap, eye)
        return DualMatrix(inv, inv @ self.der @ inv)


class MatrixGain:
    """A matrix-valued gain z -> M(z), evaluated with derivative tracking."""

    def __init__(self, evaluate: Callable[[Dual], DualMatrix], dim: int):
        self._evaluate = evaluate
        self.dim = dim

    def __call__(self, z: Dual) -> DualMatrix:
        return self._evaluate(z)

    @classmethod
    def constant(cls, m: np.ndarray) -> "MatrixGain":
        m = np.asarray(m, dtype=float)
        return cls(lambda z: DualMatrix.constant(m), m.shape[0])

    @classmethod
    def monomial(cls, m: np.ndarray, power: int = 1) -> "MatrixGain":
        """The gain z^power * M."""
        m = np.asarray(m, dtype=float)
        return cls(lambda z: DualMatrix.constant(m).scale(z**power), m.shape[0])


def _check_dims(g1: MatrixGain, g2: MatrixGain):
    if g1.dim != g2.dim:
        raise ValueError(f"gain dimensions differ: {g1.dim} vs {g2.dim}")


def series(g1: MatrixGain, g2: MatrixGain) -> MatrixGain:
    """Gain of g1 followed by g2 along a path: z -> g1(z) g2(z)."""
    _check_dims(g1, g2)
    return MatrixGain(lambda z: g1(z) @ g2(z), g1.dim)


def parallel(g1: MatrixGain, g2: MatrixGain) -> MatrixGain:
    """Gain of two branches sharing endpoints: z -> g1(z) + g2(z)."""
    _check_dims(g1, g2)
    return MatrixGain(lambda z: g1(z) + g2(z), g1.dim)


def self_loop(g: MatrixGain) -> MatrixGain:
    """Eliminate a self-loop of gain g: z -> (I - g(z))^{-1}."""
    return MatrixGain(lambda z: g(z).inverse_of_identity_minus(), g.dim)


def pgf_stats(mgf: MatrixGain, composite) -> tuple[float, float]:
    """Reduce a matrix generating function to its scalar mean and total mass.

    The scalar generating function is pi_I M(z) 1 / (pi_I 1) with
    pi_I = pi P_0 built from the composite channel.  Returns
    (mean, normalization) = (derivative at 1, value at 1).  A value that
    strays from one by more than 1e-6 indicates a malformed flow graph and
    raises NormalizationError.
    """
    pi_in = composite.stationary @ composite.success
    mass = float(pi_in.sum())
    if mass <= 0.0:
        raise SingularityError("input-state vector has zero mass; forward channel never succeeds")
    m = mgf(Dual(1.0, 1.0))
    ones = np.ones(m.dim)
    value = float(pi_in @ m.val @ ones) / mass
    mean = float(pi_in @ m.der @ ones) / mass
    if abs(value - 1.0) > 1e-6:
        raise NormalizationError(f"generating function sums to {value!r} at z=1, expected 1")
    return mean, value
