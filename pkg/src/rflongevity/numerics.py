"""Shared numerical primitives.

Stable log-binomials, extreme eigenpairs of symmetric tridiagonal matrices,
ordinary least-squares line fits and probability-vector checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.linalg import eigh_tridiagonal

__all__ = [
    "DegenerateFitError",
    "LineFit",
    "TridiagonalSymmetric",
    "check_probability_vector",
    "extreme_eigenpair",
    "fit_line",
    "log_binomial",
    "log_binomial_array",
    "signed_log_sum",
]

PROBABILITY_ENTRY_TOL = 1e-12
PROBABILITY_SUM_TOL = 1e-10

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
# stirling remainder lgamma(n+1) - [(n+1/2) log n - n + log(2 pi)/2], exact enough below 16
_STIRLERR_SMALL = np.array(
    [1.0 - _HALF_LOG_2PI]
    + [math.lgamma(i + 1) - (i + 0.5) * math.log(i) + i - _HALF_LOG_2PI for i in range(1, 16)]
)
_SPLITTER = 134217729.0  # 2**27 + 1


class DegenerateFitError(ValueError):
    """Raised when a line fit has no unique solution (all abscissae equal)."""


def _stirlerr(n: int) -> float:
    if n < 16:
        return float(_STIRLERR_SMALL[n])
    n2 = float(n) * n
    return (1 / 12 - (1 / 360 - (1 / 1260 - (1 / 1680 - 1 / (1188 * n2)) / n2) / n2) / n2) / n


def _stirlerr_array(n: np.ndarray) -> np.ndarray:
    out = np.empty(n.shape, dtype=float)
    small = n < 16
    out[small] = _STIRLERR_SMALL[n[small].astype(np.int64)]
    big = n[~small]
    n2 = big * big
    out[~small] = (1 / 12 - (1 / 360 - (1 / 1260 - (1 / 1680 - 1 / (1188 * n2)) / n2) / n2) / n2) / big
    return out


def _two_prod(x: float, y: float) -> tuple[float, float]:
    # Dekker: x*y == p + e exactly
    p = x * y
    t = _SPLITTER * x
    xh = t - (t - x)
    xl = x - xh
    t = _SPLITTER * y
    yh = t - (t - y)
    yl = y - yh
    e = ((xh * yh - p) + xh * yl + xl * yh) + xl * yl
    return p, e


def _scaled_log_ratio(scale: int, num: int, den: int) -> list[float]:
    """Pieces summing to ``scale * log(num / den)`` with the quotient rounding undone."""
    q = num / den
    rel = float(Fraction(num, den) / Fraction(q) - 1)
    p, e = _two_prod(float(scale), math.log(q))
    return [p, e, scale * rel]


def log_binomial(n: int, k: int) -> float:
    """Natural log of the binomial coefficient C(n, k).

    Returns ``-inf`` when ``k < 0`` or ``k > n``. The value is assembled from
    Stirling remainders plus the entropy-like leading terms, which are all
    non-negative, so nothing cancels; for ``n <= 10**4`` the exponentiated
    result matches the exact integer to about one part in 10**12.

    >>> round(math.exp(log_binomial(4, 2)), 12)
    6.0
    """
    n = int(n)
    k = int(k)
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    if k < 0 or k > n:
        return -math.inf
    k = min(k, n - k)
    if k == 0:
        return 0.0
    rest = n - k
    parts = _scaled_log_ratio(k, n, k) + _scaled_log_ratio(rest, n, rest)
    parts += [
        _stirlerr(n),
        -_stirlerr(k),
        -_stirlerr(rest),
        0.5 * math.log(n / (k * rest)),
        -_HALF_LOG_2PI,
    ]
    return math.fsum(parts)


def log_binomial_array(n, k) -> np.ndarray:
    """Vectorised :func:`log_binomial` (about 1e-11 relative, no exact corrections)."""
    n, k = np.broadcast_arrays(np.asarray(n, dtype=float), np.asarray(k, dtype=float))
    out = np.full(n.shape, -np.inf)
    valid = (k >= 0) & (k <= n)
    small = np.minimum(k, n - k)
    out[valid & (small == 0)] = 0.0
    inner = valid & (small > 0)
    a = n[inner]
    b = small[inner]
    c = a - b
    out[inner] = (
        b * np.log(a / b)
        + c * np.log1p(b / c)
        + _stirlerr_array(a)
        - _stirlerr_array(b)
        - _stirlerr_array(c)
        + 0.5 * np.log(a / (b * c))
        - _HALF_LOG_2PI
    )
    return out


def signed_log_sum(log_magnitudes: np.ndarray, signs: np.ndarray) -> tuple[float, float]:
    """Sum ``signs * exp(log_magnitudes)``.

    Returns the sum and an estimate of its relative rounding error,
    ``eps * count * sum|t| / |sum t|``; the estimate is ``inf`` when the
    sum cancels to zero.
    """
    log_magnitudes = np.asarray(log_magnitudes, dtype=float)
    finite = np.isfinite(log_magnitudes)
    if not finite.any():
        return 0.0, 0.0
    lm = log_magnitudes[finite]
    sg = np.asarray(signs, dtype=float)[finite]
    top = lm.max()
    scaled = np.exp(lm - top)
    total = math.fsum(sg * scaled)
    absolute = math.fsum(scaled)
    if total == 0.0:
        return 0.0, math.inf
    rel_err = np.finfo(float).eps * len(scaled) * absolute / abs(total)
    return total * math.exp(top), rel_err


@dataclass(frozen=True)
class TridiagonalSymmetric:
    """Real symmetric tridiagonal matrix stored by its two diagonals."""

    diagonal: np.ndarray
    offdiagonal: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diagonal, dtype=float).reshape(-1)
        e = np.asarray(self.offdiagonal, dtype=float).reshape(-1)
        if d.size < 1:
            raise ValueError("dimension must be at least 1")
        if e.size != d.size - 1:
            raise ValueError(
                f"offdiagonal length {e.size} inconsistent with dimension {d.size}"
            )
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(e))):
            raise ValueError("matrix entries must be finite")
        object.__setattr__(self, "diagonal", d)
        object.__setattr__(self, "offdiagonal", e)

    @property
    def dimension(self) -> int:
        return self.diagonal.size

    @classmethod
    def path_adjacency(cls, n: int) -> "TridiagonalSymmetric":
        """Zero diagonal, unit off-diagonal matrix of dimension ``n + 1``."""
        return cls(np.zeros(n + 1), np.ones(n))

    def to_dense(self) -> np.ndarray:
        return (
            np.diag(self.diagonal)
            + np.diag(self.offdiagonal, 1)
            + np.diag(self.offdiagonal, -1)
        )

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diagonal * v
        out[:-1] += self.offdiagonal * v[1:]
        out[1:] += self.offdiagonal * v[:-1]
        return out

    def inf_norm(self) -> float:
        row = np.abs(self.diagonal).copy()
        row[:-1] += np.abs(self.offdiagonal)
        row[1:] += np.abs(self.offdiagonal)
        return float(row.max())

    def __neg__(self) -> "TridiagonalSymmetric":
        return TridiagonalSymmetric(-self.diagonal, -self.offdiagonal)


def _fix_sign(v: np.ndarray) -> np.ndarray:
    scale = np.abs(v).max()
    nonzero = np.flatnonzero(np.abs(v) > 1e-14 * scale)
    if nonzero.size and v[nonzero[0]] < 0:
        v = -v
    return v


def extreme_eigenpair(m: TridiagonalSymmetric, which: str = "largest") -> tuple[float, np.ndarray]:
    """Largest or smallest eigenpair of a symmetric tridiagonal matrix.

    The eigenvector has unit Euclidean norm and its first non-negligible
    entry is positive. The smallest pair is the negated largest pair of ``-m``.
    """
    if which == "smallest":
        value, vector = extreme_eigenpair(-m, "largest")
        return -value, vector
    if which != "largest":
        raise ValueError(f"which must be 'largest' or 'smallest', got {which!r}")
    n = m.dimension
    if n == 1:
        return float(m.diagonal[0]), np.ones(1)
    values, vectors = eigh_tridiagonal(
        m.diagonal, m.offdiagonal, select="i", select_range=(n - 1, n - 1)
    )
    v = vectors[:, 0]
    v = _fix_sign(v / np.linalg.norm(v))
    return float(values[0]), v


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    residual_rms: float
    point_count: int


def fit_line(xs, ys) -> LineFit:
    """Ordinary least-squares fit of ``ys = slope * xs + intercept``."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("xs and ys must be 1-d and of equal length")
    if x.size < 2:
        raise ValueError("at least two points are required")
    dx = x - x.mean()
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise DegenerateFitError("all abscissae are equal; slope undefined")
    slope = float(dx @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (slope * x + intercept)
    return LineFit(slope, intercept, float(np.sqrt(np.mean(resid**2))), int(x.size))


def check_probability_vector(p, *, name: str = "populations") -> np.ndarray:
    """Validate and return ``p`` as a float array of probabilities."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-d vector")
    if not np.all(np.isfinite(p)):
        raise ValueError(f"{name} contains non-finite entries")
    if p.min() < -PROBABILITY_ENTRY_TOL or p.max() > 1 + PROBABILITY_ENTRY_TOL:
        raise ValueError(f"{name} entries must lie in [0, 1]")
    if abs(p.sum() - 1.0) > PROBABILITY_SUM_TOL:
        raise ValueError(f"{name} must sum to 1 (got {p.sum():.17g})")
    return p
