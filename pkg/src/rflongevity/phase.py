"""Bounded-energy phase reference (a single oscillator mode).

The density matrix is stored band by band: band ``k`` holds
``rho[m, m + k]`` for ``m = 0 .. cutoff - k``. The update map never mixes
bands, and the success probability only needs band 1, so the default is to
track bands 0 and 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import poisson

from .numerics import TridiagonalSymmetric, extreme_eigenpair, log_binomial_array

__all__ = [
    "Coherent",
    "FockBandState",
    "OptimalBounded",
    "closed_form_band1",
    "closed_form_band1_vector",
    "coherent_state",
    "optimal_phase_state",
    "phase_projectors",
    "simulate_phase",
    "success_probability_phase",
    "update_phase",
]

SINE_MATCH_TOL = 1e-10
DEFAULT_TAIL_TOLERANCE = 1e-12


@dataclass(frozen=True)
class FockBandState:
    """Truncated oscillator state kept as a dict ``{k: rho[m, m+k]}``.

    ``dropped_trace`` accumulates population pushed past ``cutoff`` by
    fixed-cutoff updates, so ``trace + dropped_trace`` stays 1.
    """

    cutoff: int
    bands: dict = field(repr=False)
    dropped_trace: float = 0.0

    def __post_init__(self):
        if self.cutoff < 0:
            raise ValueError("cutoff must be non-negative")
        if not self.bands:
            raise ValueError("at least one band must be tracked")
        clean = {}
        for k, v in self.bands.items():
            k = int(k)
            v = np.asarray(v, dtype=complex)
            if k < 0:
                raise ValueError(f"band offset must be non-negative, got {k}")
            length = max(self.cutoff + 1 - k, 0)
            if v.shape != (length,):
                raise ValueError(f"band {k} must have length {length}")
            clean[k] = v
        if 0 in clean:
            d0 = clean[0]
            if np.abs(d0.imag).max() > 1e-12 or d0.real.min() < -1e-12:
                raise ValueError("band 0 must be real and non-negative")
        object.__setattr__(self, "bands", dict(sorted(clean.items())))

    @classmethod
    def from_amplitudes(cls, amplitudes, *, bands=(0, 1), cutoff: int | None = None) -> "FockBandState":
        """Pure state ``sum_m c_m |m>``; ``bands="all"`` tracks every band.

        ``cutoff`` may exceed the support to leave headroom for fixed-cutoff
        evolution.
        """
        c = np.asarray(amplitudes, dtype=complex)
        norm = np.linalg.norm(c)
        if norm == 0:
            raise ValueError("amplitudes must not all vanish")
        c = c / norm
        if cutoff is None:
            cutoff = c.size - 1
        if cutoff < c.size - 1:
            raise ValueError("cutoff smaller than the amplitude support")
        c = np.pad(c, (0, cutoff + 1 - c.size))
        ks = range(cutoff + 1) if bands == "all" else bands
        # rho[m, m+k] = c_m conj(c_{m+k})
        return cls(cutoff, {k: c[: c.size - k] * np.conj(c[k:]) for k in ks})

    @classmethod
    def from_matrix(cls, rho, *, bands="all") -> "FockBandState":
        rho = np.asarray(rho, dtype=complex)
        cutoff = rho.shape[0] - 1
        ks = range(cutoff + 1) if bands == "all" else bands
        return cls(cutoff, {k: np.diagonal(rho, k).copy() for k in ks})

    @property
    def tracked_band_count(self) -> int:
        return len(self.bands)

    def band(self, k: int) -> np.ndarray:
        if k > self.cutoff:
            return np.zeros(0, dtype=complex)
        try:
            return self.bands[k]
        except KeyError:
            raise KeyError(f"band {k} is not tracked") from None

    def trace(self) -> float:
        return float(self.band(0).real.sum())

    def mean_number(self) -> float:
        d0 = self.band(0).real
        return float(np.arange(d0.size) @ d0)

    def has_all_bands(self) -> bool:
        return all(k in self.bands for k in range(self.cutoff + 1))

    def to_matrix(self) -> np.ndarray:
        if not self.has_all_bands():
            raise ValueError("reconstruction needs every band up to the cutoff")
        dim = self.cutoff + 1
        rho = np.zeros((dim, dim), dtype=complex)
        for k, v in self.bands.items():
            idx = np.arange(dim - k)
            rho[idx, idx + k] = v
            rho[idx + k, idx] = np.conj(v)
        return rho

    def padded(self, cutoff: int) -> "FockBandState":
        """Same state with a larger cutoff (zeros above the old one)."""
        if cutoff < self.cutoff:
            raise ValueError("cannot shrink the cutoff")
        extra = cutoff - self.cutoff
        bands = {k: np.pad(v, (0, extra)) for k, v in self.bands.items()}
        if self.has_all_bands():
            bands.update({k: np.zeros(cutoff + 1 - k, complex) for k in range(self.cutoff + 1, cutoff + 1)})
        return FockBandState(cutoff, bands, self.dropped_trace)


@dataclass(frozen=True)
class OptimalBounded:
    """Sine-profile state on Fock states ``0..N``."""

    N: int

    @property
    def mean_number(self) -> float:
        return self.N / 2

    def prepare(self, **kwargs) -> FockBandState:
        return optimal_phase_state(self.N, **kwargs)


@dataclass(frozen=True)
class Coherent:
    alpha: float
    tail_tolerance: float = DEFAULT_TAIL_TOLERANCE

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if not 0 < self.tail_tolerance <= 1e-6:
            raise ValueError("tail_tolerance must lie in (0, 1e-6]")

    @property
    def mean_number(self) -> float:
        return self.alpha**2

    def prepare(self, **kwargs) -> FockBandState:
        return coherent_state(self.alpha, self.tail_tolerance, **kwargs)


def optimal_sine_amplitudes(N: int) -> np.ndarray:
    m = np.arange(N + 1)
    a = np.sin((m + 1) * np.pi / (N + 2))
    return a / np.linalg.norm(a)


def optimal_phase_state(N: int, *, bands=(0, 1), cutoff: int | None = None) -> FockBandState:
    """Bounded-number state maximising the initial success probability.

    The amplitudes come from the top eigenvector of the ``(N+1)``-dimensional
    path matrix (unit couplings between neighbouring Fock states) and are
    checked against the closed sine profile.
    """
    if N < 0:
        raise ValueError("N must be non-negative")
    _, vec = extreme_eigenpair(TridiagonalSymmetric.path_adjacency(N), "largest")
    sine = optimal_sine_amplitudes(N)
    mismatch = np.abs(vec - sine).max()
    if mismatch > SINE_MATCH_TOL:
        raise RuntimeError(f"eigenvector deviates from sine profile by {mismatch:.3g}")
    return FockBandState.from_amplitudes(vec, bands=bands, cutoff=cutoff)


def coherent_cutoff(alpha: float, tail_tolerance: float = DEFAULT_TAIL_TOLERANCE) -> int:
    """Smallest ``M`` whose neglected Poisson tail is below ``tail_tolerance``."""
    mu = alpha * alpha
    if mu == 0:
        return 0
    m = int(mu)
    while poisson.sf(m, mu) >= tail_tolerance:
        m += max(1, int(math.sqrt(mu)) // 4)
    while m > 0 and poisson.sf(m - 1, mu) < tail_tolerance:
        m -= 1
    return m


def coherent_state(
    alpha: float,
    tail_tolerance: float = DEFAULT_TAIL_TOLERANCE,
    *,
    bands=(0, 1),
    cutoff: int | None = None,
) -> FockBandState:
    """Truncated, renormalised coherent state with real amplitude ``alpha``."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    m_cut = coherent_cutoff(alpha, tail_tolerance)
    m = np.arange(m_cut + 1)
    if alpha == 0:
        amps = np.zeros(1)
        amps[0] = 1.0
    else:
        log_c = -0.5 * alpha * alpha + m * math.log(alpha) - 0.5 * np.array([math.lgamma(v + 1) for v in m])
        amps = np.exp(log_c)
    return FockBandState.from_amplitudes(amps, bands=bands, cutoff=cutoff)


def phase_projectors(cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    """Joint-space ``(Pi_plus, Pi_minus)``, basis index ``2 * r + s``.

    ``|m, +-> = (|m>|0> +- |m-1>|1>)/sqrt(2)`` for ``m = 1..cutoff``;
    ``Pi_plus`` also holds ``|0>|0>``. The vector ``|cutoff>|1>`` belongs to
    neither (its partner lies beyond the cutoff).
    """
    if cutoff < 0:
        raise ValueError("cutoff must be non-negative")
    dim = 2 * (cutoff + 1)
    plus = np.zeros((dim, dim))
    minus = np.zeros((dim, dim))
    plus[0, 0] = 1.0
    for m in range(1, cutoff + 1):
        v = np.zeros(dim)
        v[2 * m] = 1 / math.sqrt(2)
        v[2 * (m - 1) + 1] = 1 / math.sqrt(2)
        plus += np.outer(v, v)
        v[2 * (m - 1) + 1] *= -1
        minus += np.outer(v, v)
    return plus, minus


def _step_band(v: np.ndarray, k: int, grow: bool) -> tuple[np.ndarray, float]:
    n = v.size
    out = np.zeros(n + 1 if grow else n, dtype=complex)
    out[:n] = 0.5 * v
    out[: n - 1] += 0.25 * v[1:]  # A rho A^dag
    if grow:
        out[1 : n + 1] += 0.25 * v
    else:
        out[1:n] += 0.25 * v[:-1]  # A^dag rho A
    dropped = 0.0
    if k == 0:
        if n:
            out[0] += 0.25 * v[0]
        if not grow and n:
            dropped = 0.25 * v[-1].real
    return out, dropped


def update_phase(state: FockBandState, *, grow: bool = False) -> FockBandState:
    """One averaged measurement: ``rho/2 + P0 rho P0/4 + A^dag rho A/4 + A rho A^dag/4``.

    ``A^dag rho A`` moves weight one Fock level up. With ``grow=False`` the
    cutoff is fixed and whatever crosses it is discarded (counted in
    ``dropped_trace``); ``grow=True`` raises the cutoff by one so the step
    is exact.
    """
    if not state.bands:
        raise ValueError("state has no bands")
    new_bands = {}
    dropped = state.dropped_trace
    for k, v in state.bands.items():
        new_bands[k], lost = _step_band(v, k, grow)
        dropped += lost
    cutoff = state.cutoff + 1 if grow else state.cutoff
    if grow and state.has_all_bands():
        new_bands[cutoff] = np.zeros(1, dtype=complex)
    return FockBandState(cutoff, new_bands, dropped)


def success_probability_phase(state: FockBandState) -> float:
    """``1/2 + sum_m Re rho[m, m+1] / 2``."""
    return 0.5 + 0.5 * float(state.band(1).real.sum())


def _kernel(n: int, offsets: np.ndarray) -> np.ndarray:
    # 4^-n C(2n, n + offsets)
    return np.exp(log_binomial_array(2 * n, n + offsets) - n * math.log(4.0))


def closed_form_band1_vector(initial: FockBandState, n: int) -> np.ndarray:
    """``rho[m, m+1]`` after ``n`` exact (growing) updates for ``m = 0..cutoff+n-1``.

    The band-1 recurrence is a lazy random walk absorbed below ``m = 0``;
    labelling the entries ``b_i = rho[i-1, i]`` (``i >= 1``) gives the image
    solution ``b_i(n) = 4^-n sum_l [C(2n, n-l+i) - C(2n, n-l-i)] b_l(0)``.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    b0 = initial.band(1)
    if n == 0:
        return b0.copy()
    size = b0.size + n
    i = np.arange(1, size + 1)[:, None]
    ell = np.arange(1, b0.size + 1)[None, :]
    weights = _kernel(n, i - ell) - _kernel(n, -ell - i)
    return weights @ b0


def closed_form_band1(initial: FockBandState, n: int, m: int) -> complex:
    """Single entry ``rho[m, m+1]`` after ``n`` updates (see :func:`closed_form_band1_vector`)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if m < 0:
        raise ValueError("m must be non-negative")
    b0 = initial.band(1)
    if n == 0:
        return complex(b0[m]) if m < b0.size else 0j
    i = m + 1
    ell = np.arange(1, b0.size + 1)
    weights = _kernel(n, i - ell) - _kernel(n, -ell - i)
    return complex(weights @ b0)


def band1_success_sum(b: np.ndarray) -> float:
    return 0.5 + 0.5 * float(np.real(b).sum())


def simulate_phase(initial: FockBandState, n_steps: int, *, until_error: float | None = None) -> np.ndarray:
    """Success probability after 0..n_steps exact uses.

    Only band 1 is evolved. With ``until_error`` the run stops at the first
    step whose error probability exceeds it (that step is included).
    """
    b = initial.band(1).astype(complex)
    values = [band1_success_sum(b)]
    for _ in range(n_steps):
        nb = np.zeros(b.size + 1, dtype=complex)
        nb[:-1] = 0.5 * b
        nb[:-2] += 0.25 * b[1:]
        nb[1:] += 0.25 * b
        b = nb
        values.append(band1_success_sum(b))
        if until_error is not None and 1.0 - values[-1] > until_error:
            break
    return np.array(values)
