"""Polynomial and dense-matrix numerics used by every other module.

Matrices are plain ``numpy.ndarray`` values (row-major, shape ``(rows, cols)``).
Polynomials are immutable coefficient sequences in ascending degree order:
``coeffs[i]`` multiplies ``s**i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DimensionError, DomainError, NumericError

# Trailing (highest-degree) coefficients below EPS_TRIM * max|coeff| are trimmed;
# interpolation in the stability module produces numerically-zero high coefficients.
EPS_TRIM = 1e-12
# Routh pivots at or below this (after scale balancing) count as marginal, i.e. not Hurwitz.
EPS_PIVOT = 1e-12
# Aberth-Ehrlich update threshold and iteration budget.
EPS_ROOT = 1e-10
MAX_ROOT_ITER = 200
# Roots with real part above -EPS_HURWITZ are not considered strictly left-half-plane.
EPS_HURWITZ = 1e-9


@dataclass(frozen=True)
class Polynomial:
    """Real univariate polynomial with ascending-order coefficients.

    The zero polynomial is stored as the singleton ``(0.0,)`` and reports
    degree ``-inf``; for everything else the leading coefficient is nonzero
    after construction-time trimming.
    """

    coeffs: tuple

    def __init__(self, coeffs):
        arr = [float(c) for c in coeffs]
        if not all(math.isfinite(c) for c in arr):
            raise NumericError("polynomial coefficients must be finite")
        if arr:
            floor = EPS_TRIM * max(abs(c) for c in arr)
            while arr and abs(arr[-1]) <= floor:
                arr.pop()
        if not arr:
            arr = [0.0]
        object.__setattr__(self, "coeffs", tuple(arr))

    @property
    def degree(self):
        """Polynomial degree; ``-inf`` for the zero polynomial."""
        if self.is_zero:
            return float("-inf")
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return self.coeffs == (0.0,)

    def __call__(self, x):
        """Evaluate at a real or complex point by Horner's rule."""
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        if self.is_zero or other.is_zero:
            return Polynomial([0.0])
        return Polynomial(np.convolve(self.coeffs, other.coeffs))

    def __add__(self, other: "Polynomial") -> "Polynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        out = np.zeros(n)
        out[: len(self.coeffs)] += self.coeffs
        out[: len(other.coeffs)] += other.coeffs
        return Polynomial(out)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + other.scaled(-1.0)

    def scaled(self, factor: float) -> "Polynomial":
        return Polynomial([factor * c for c in self.coeffs])

    def derivative(self) -> "Polynomial":
        if len(self.coeffs) <= 1:
            return Polynomial([0.0])
        return Polynomial([i * c for i, c in enumerate(self.coeffs)][1:])

    def monic(self) -> "Polynomial":
        if self.is_zero:
            raise DomainError("zero polynomial has no monic form")
        return self.scaled(1.0 / self.coeffs[-1])

    def leading_monomial(self) -> "Polynomial":
        """The single highest-degree term (trimming already applied a relative floor)."""
        if self.is_zero:
            raise DomainError("zero polynomial has no leading monomial")
        out = [0.0] * len(self.coeffs)
        out[-1] = self.coeffs[-1]
        return Polynomial(out)

    def coeffs_padded(self, length: int) -> np.ndarray:
        """Ascending coefficients zero-padded to ``length`` entries."""
        out = np.zeros(length)
        out[: len(self.coeffs)] = self.coeffs
        return out

    def pow(self, exponent: int) -> "Polynomial":
        if exponent < 0:
            raise DomainError("negative polynomial powers are not defined here")
        out = Polynomial([1.0])
        for _ in range(exponent):
            out = out * self
        return out


@dataclass(frozen=True)
class RootReport:
    """All complex roots of a polynomial plus the stability verdict they imply."""

    roots: tuple
    max_real_part: float
    hurwitz: bool


def poly_mul(p: Polynomial, q: Polynomial) -> Polynomial:
    """Product of two polynomials (coefficient convolution)."""
    return p * q


def _require_square(m: np.ndarray, what: str) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"{what} must be a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericError(f"{what} has non-finite entries")
    return m


def _balance(m: np.ndarray) -> np.ndarray:
    """Osborne balancing with radix-2 factors.

    Similarity by powers of two is exact in floating point, so the
    characteristic polynomial is unchanged while row/column norms are
    equalized. Essential when the matrix mixes entries across ~16 decades.
    """
    a = m.copy()
    n = a.shape[0]
    for _ in range(100):
        done = True
        for i in range(n):
            r = np.sum(np.abs(a[i, :])) - abs(a[i, i])
            c = np.sum(np.abs(a[:, i])) - abs(a[i, i])
            if r == 0.0 or c == 0.0:
                continue
            f = 1.0
            while c < r / 2.0:
                c *= 2.0
                r /= 2.0
                f *= 2.0
            while c >= r * 2.0:
                c /= 2.0
                r *= 2.0
                f /= 2.0
            if f != 1.0:
                done = False
                a[:, i] *= f
                a[i, :] /= f
        if done:
            break
    return a


def char_poly(m: np.ndarray) -> Polynomial:
    """Monic characteristic polynomial det(sI - M) by the Faddeev-LeVerrier recursion."""
    a = _require_square(m, "char_poly input")
    a = _balance(a)
    n = a.shape[0]
    coeffs = np.zeros(n + 1)
    coeffs[n] = 1.0
    eye = np.eye(n)
    aux = np.zeros_like(a)
    for k in range(1, n + 1):
        aux = a @ aux + coeffs[n - k + 1] * eye
        coeffs[n - k] = -np.trace(a @ aux) / k
    return Polynomial(coeffs)


def expm_and_integral(a: np.ndarray, horizon: float) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(exp(A*T), integral_0^T exp(A*tau) dtau)`` for T = ``horizon``.

    Both come from one exponential of the augmented block matrix
    ``[[A, I], [0, 0]] * T``: its top-left block is exp(A*T) and its top-right
    block is the integral. The exponential itself uses scaling-and-squaring
    with a fixed-order truncated series (order 20, scaled so the 1-norm is
    at most 1/2), which is exact up to roundoff for the nilpotent matrices of
    integrator chains.
    """
    a = _require_square(a, "expm_and_integral input")
    if not (horizon > 0.0 and math.isfinite(horizon)):
        raise DomainError(f"horizon must be a positive real, got {horizon}")
    n = a.shape[0]
    aug = np.zeros((2 * n, 2 * n))
    aug[:n, :n] = a * horizon
    aug[:n, n:] = np.eye(n) * horizon
    norm = np.linalg.norm(aug, 1)
    squarings = 0
    if norm > 0.5:
        squarings = max(0, int(math.ceil(math.log2(norm / 0.5))))
    x = aug / (2.0 ** squarings)
    result = np.eye(2 * n)
    term = np.eye(2 * n)
    for i in range(1, 21):
        term = term @ x / i
        result = result + term
    for _ in range(squarings):
        result = result @ result
    return result[:n, :n].copy(), result[:n, n:].copy()


def routh_hurwitz(p: Polynomial) -> bool:
    """True iff every root of ``p`` lies strictly in the open left half-plane.

    Decided by the Routh array. Zero pivots (within ``EPS_PIVOT`` after scale
    balancing) are failures: marginal stability is not Hurwitz.
    """
    if p.degree < 1:
        raise DomainError("routh_hurwitz requires degree >= 1")
    asc = np.array(p.coeffs, dtype=float)
    n = len(asc) - 1
    scale = np.max(np.abs(asc))
    # A zero constant term means a root at the origin: marginal, not Hurwitz.
    if abs(asc[0]) <= EPS_TRIM * scale:
        return False
    # Rescale s -> lambda*s so both end coefficients have equal magnitude;
    # Hurwitzness is invariant and pivots stay clear of the absolute threshold.
    lam = (abs(asc[0]) / abs(asc[n])) ** (1.0 / n)
    asc = asc * lam ** np.arange(n + 1)
    asc /= np.max(np.abs(asc))
    if asc[n] < 0.0:
        asc = -asc
    # Necessary condition: all coefficients strictly positive.
    if np.min(asc) <= EPS_PIVOT:
        return False
    desc = asc[::-1]
    row_hi = list(desc[0::2])
    row_lo = list(desc[1::2])
    width = len(row_hi)
    row_lo += [0.0] * (width - len(row_lo))
    for _ in range(n - 1):
        pivot = row_lo[0]
        if pivot <= EPS_PIVOT:
            return False
        new = [0.0] * width
        for j in range(width - 1):
            new[j] = (pivot * row_hi[j + 1] - row_hi[0] * row_lo[j + 1]) / pivot
        row_hi, row_lo = row_lo, new
    return row_lo[0] > EPS_PIVOT


def _horner_many(coeffs_desc: np.ndarray, z: np.ndarray) -> np.ndarray:
    acc = np.zeros_like(z)
    for c in coeffs_desc:
        acc = acc * z + c
    return acc


def poly_roots(p: Polynomial) -> RootReport:
    """All complex roots via the Aberth-Ehrlich simultaneous iteration.

    Iterates start on a perturbed circle of radius given by the Cauchy bound.
    A root is accepted once its update falls below ``EPS_ROOT`` or its residual
    reaches the Horner roundoff floor (multiple roots cannot satisfy the update
    criterion in finite precision). Raises ``ConvergenceError`` carrying the
    best iterate if the budget is exhausted.
    """
    if p.degree < 1:
        raise DomainError("poly_roots requires degree >= 1")
    monic = np.array(p.monic().coeffs, dtype=float)
    n = len(monic) - 1
    cauchy = 1.0 + np.max(np.abs(monic[:-1]))
    angles = 2.0 * np.pi * (np.arange(n) + 0.5) / n + 0.4
    z = cauchy * np.exp(1j * angles)
    coeffs_desc = monic[::-1]
    deriv_desc = (monic[1:] * np.arange(1, n + 1))[::-1]
    eps = np.finfo(float).eps
    for iteration in range(1, MAX_ROOT_ITER + 1):
        pv = _horner_many(coeffs_desc, z)
        # Roundoff floor of the Horner evaluation at each iterate.
        floor = 4.0 * n * eps * _horner_many(np.abs(coeffs_desc), np.abs(z)).real
        dv = _horner_many(deriv_desc, z)
        stalled = np.abs(dv) == 0.0
        if np.any(stalled):
            z = np.where(stalled, z * (1.0 + 1e-6) + 1e-6, z)
            continue
        w = pv / dv
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        inv = 1.0 / diff
        np.fill_diagonal(inv, 0.0)
        denom = 1.0 - w * inv.sum(axis=1)
        denom = np.where(np.abs(denom) < 1e-300, 1e-300, denom)
        step = w / denom
        at_floor = np.abs(pv) <= floor
        step = np.where(at_floor, 0.0, step)
        z = z - step
        small = np.abs(step) <= EPS_ROOT * (1.0 + np.abs(z))
        if np.all(small | at_floor):
            break
    else:
        report = _report_from(z)
        raise ConvergenceError(
            f"root iteration did not converge in {MAX_ROOT_ITER} iterations",
            best=report, iterations=MAX_ROOT_ITER)
    return _report_from(z)


def _report_from(z: np.ndarray) -> RootReport:
    # Snap conjugate-pair residue onto the real axis for cleaner reports.
    snapped = [complex(r.real, 0.0) if abs(r.imag) <= 1e-12 * (1.0 + abs(r)) else complex(r)
               for r in z]
    ordered = tuple(sorted(snapped, key=lambda r: (r.real, r.imag)))
    max_re = max(r.real for r in ordered)
    return RootReport(roots=ordered, max_real_part=max_re,
                      hurwitz=bool(max_re < -EPS_HURWITZ))


def poly_from_roots(roots) -> Polynomial:
    """Monic polynomial with the given (possibly complex) roots.

    Complex parts must cancel to roundoff; intended for reconstruction-style
    round-trip checks.
    """
    acc = np.array([1.0 + 0.0j])
    for r in roots:
        acc = np.convolve(acc, np.array([-r, 1.0 + 0.0j]))
    if np.max(np.abs(acc.imag)) > 1e-8 * max(1.0, np.max(np.abs(acc.real))):
        raise NumericError("roots are not closed under conjugation")
    return Polynomial(acc.real)


def companion_matrix(p: Polynomial) -> np.ndarray:
    """Companion matrix (bottom-row convention) of a monic-normalized polynomial."""
    if p.degree < 1:
        raise DomainError("companion matrix requires degree >= 1")
    monic = p.monic()
    n = len(monic.coeffs) - 1
    m = np.zeros((n, n))
    m[:-1, 1:] = np.eye(n - 1)
    m[-1, :] = [-c for c in monic.coeffs[:-1]]
    return m
