"""Spin-j directional reference frame.

States are written in the ``|j, m>`` basis with index ``x = j - m`` so that
``x = 0`` is the maximal-weight (coherent) state. The spin is carried as the
integer ``two_j = 2j`` throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import check_probability_vector, log_binomial_array, signed_log_sum

__all__ = [
    "DegradationTrace",
    "DirectionalKraus",
    "RepresentationError",
    "SpinRFState",
    "analytic_success_directional",
    "closed_form_populations",
    "decay_factor",
    "initial_slope_directional",
    "kraus_directional",
    "optimal_directional_state",
    "simulate_directional",
    "success_probability_directional",
    "update_diagonal",
    "update_full",
]

CLOSED_FORM_MAX_REL_ERR = 1e-8


class RepresentationError(TypeError):
    """Operation called on a state with the wrong storage representation."""


def _check_two_j(two_j) -> int:
    if int(two_j) != two_j or two_j <= 0:
        raise ValueError(f"two_j must be a positive integer, got {two_j!r}")
    return int(two_j)


@dataclass(frozen=True)
class SpinRFState:
    """Density matrix of a spin-j frame.

    Exactly one of ``populations`` (diagonal in ``x``) or ``matrix`` (full
    Hermitian, dimension ``2j+1``) is set.
    """

    two_j: int
    populations: np.ndarray | None = None
    matrix: np.ndarray | None = None

    def __post_init__(self):
        two_j = _check_two_j(self.two_j)
        object.__setattr__(self, "two_j", two_j)
        dim = two_j + 1
        if (self.populations is None) == (self.matrix is None):
            raise ValueError("give exactly one of populations or matrix")
        if self.populations is not None:
            p = check_probability_vector(self.populations)
            if p.size != dim:
                raise ValueError(f"expected {dim} populations, got {p.size}")
            object.__setattr__(self, "populations", p)
        else:
            rho = np.asarray(self.matrix)
            if rho.shape != (dim, dim):
                raise ValueError(f"expected a {dim}x{dim} matrix, got {rho.shape}")
            if np.abs(rho - rho.conj().T).max() > 1e-12:
                raise ValueError("matrix is not Hermitian")
            if abs(np.trace(rho).real - 1.0) > 1e-10:
                raise ValueError("matrix trace must be 1")
            if np.linalg.eigvalsh(rho).min() < -1e-10:
                raise ValueError("matrix is not positive semidefinite")
            object.__setattr__(self, "matrix", rho)

    @property
    def j(self) -> float:
        return self.two_j / 2

    @property
    def dimension(self) -> int:
        return self.two_j + 1

    @property
    def is_diagonal(self) -> bool:
        return self.populations is not None

    def diagonal(self) -> np.ndarray:
        if self.is_diagonal:
            return self.populations
        return np.diagonal(self.matrix).real.copy()

    def as_full(self) -> "SpinRFState":
        if not self.is_diagonal:
            return self
        return SpinRFState(self.two_j, matrix=np.diag(self.populations).astype(complex))

    @classmethod
    def maximally_mixed(cls, two_j: int, *, full: bool = False) -> "SpinRFState":
        dim = _check_two_j(two_j) + 1
        if full:
            return cls(two_j, matrix=np.eye(dim, dtype=complex) / dim)
        return cls(two_j, populations=np.full(dim, 1.0 / dim))


def optimal_directional_state(two_j: int) -> SpinRFState:
    """The coherent state ``|j, j><j, j|`` (all weight at ``x = 0``)."""
    p = np.zeros(_check_two_j(two_j) + 1)
    p[0] = 1.0
    return SpinRFState(two_j, populations=p)


@dataclass(frozen=True)
class DirectionalKraus:
    """Kraus operators ``E^c_ab = <a| Pi_c |b>`` of the relative-orientation measurement.

    The four diagonal operators are stored as vectors over ``x``. The
    couplings share one vector ``coupling`` of length ``2j`` with
    ``[E^+_01]_{x, x-1} = coupling[x-1]`` and ``E^-_01 = -E^+_01``,
    ``E^c_10 = (E^c_01)^T``.
    """

    two_j: int
    plus_00: np.ndarray
    minus_00: np.ndarray
    plus_11: np.ndarray
    minus_11: np.ndarray
    coupling: np.ndarray = field(repr=False)

    def operator(self, c: str, a: int, b: int) -> np.ndarray:
        """Dense ``E^c_ab`` for ``c`` in ``'+-'`` and ``a, b`` in ``{0, 1}``."""
        if c not in ("+", "-") or a not in (0, 1) or b not in (0, 1):
            raise ValueError(f"no Kraus operator E^{c}_{a}{b}")
        dim = self.two_j + 1
        if a == b:
            diag = {
                ("+", 0): self.plus_00,
                ("-", 0): self.minus_00,
                ("+", 1): self.plus_11,
                ("-", 1): self.minus_11,
            }[(c, a)]
            return np.diag(diag)
        sign = 1.0 if c == "+" else -1.0
        e01 = np.zeros((dim, dim))
        e01[np.arange(1, dim), np.arange(dim - 1)] = sign * self.coupling
        return e01 if (a, b) == (0, 1) else e01.T

    def projector(self, c: str) -> np.ndarray:
        """Joint-space ``Pi_c`` on R (x) S, basis index ``2 * x + s``."""
        dim = self.two_j + 1
        out = np.zeros((2 * dim, 2 * dim))
        for a in (0, 1):
            for b in (0, 1):
                out[a::2, b::2] = self.operator(c, a, b)
        return out


def kraus_directional(two_j: int) -> DirectionalKraus:
    two_j = _check_two_j(two_j)
    d = two_j + 1
    x = np.arange(d, dtype=float)
    xs = np.arange(1, d, dtype=float)
    return DirectionalKraus(
        two_j=two_j,
        plus_00=(d - x) / d,
        minus_00=x / d,
        plus_11=(x + 1) / d,
        minus_11=(two_j - x) / d,
        coupling=np.sqrt(xs * (d - xs)) / d,
    )


def _shift_weights(two_j: int) -> tuple[np.ndarray, np.ndarray]:
    d = two_j + 1
    x = np.arange(d, dtype=float)
    # u[x] = sqrt(x (2j+1-x)) couples x-1 -> x
    return x, np.sqrt(x * (d - x))


def update_diagonal(state: SpinRFState) -> SpinRFState:
    """One averaged measurement applied to a diagonal state."""
    if not state.is_diagonal:
        raise RepresentationError("update_diagonal needs a diagonal state")
    two_j = state.two_j
    d = two_j + 1
    j = two_j / 2
    x, u = _shift_weights(two_j)
    p = state.populations
    w = u * u  # x (2j+1-x)
    new = (2 * j * j + 2 * j + 1 + 2 * (j - x) ** 2) * p
    new[1:] += w[1:] * p[:-1]
    new[:-1] += w[1:] * p[1:]
    new /= d * d
    return SpinRFState(two_j, populations=new)


def update_full(state: SpinRFState) -> SpinRFState:
    """One averaged measurement applied to a full density matrix."""
    if state.is_diagonal:
        raise RepresentationError("update_full needs a full-matrix state")
    two_j = state.two_j
    d = two_j + 1
    j = two_j / 2
    x, u = _shift_weights(two_j)
    rho = state.matrix
    a = 2 * j * j + 2 * j + 1 + 2 * np.outer(j - x, j - x)
    uu = np.outer(u, u)
    new = a * rho
    new[1:, 1:] += uu[1:, 1:] * rho[:-1, :-1]
    new[:-1, :-1] += uu[1:, 1:] * rho[1:, 1:]
    new = new / (d * d)
    new = 0.5 * (new + new.conj().T)
    return SpinRFState(two_j, matrix=new)


def success_probability_directional(state: SpinRFState) -> float:
    """Average probability of correctly guessing aligned vs anti-aligned.

    Outcome ``j + 1/2`` is read as "aligned". The value is in ``[0, 1]`` and
    at least ``1/2`` whenever the frame leans towards ``+z``.
    """
    p = state.diagonal()
    x = np.arange(p.size)
    return 1.0 - float((x + 0.5) @ p) / state.dimension


def decay_factor(two_j: int) -> float:
    d = _check_two_j(two_j) + 1
    return 1.0 - 2.0 / (d * d)


def analytic_success_directional(two_j: int, n: int) -> float:
    """``1/2 + j/(2j+1) * (1 - 2/(2j+1)^2)^n`` for the coherent initial state."""
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    two_j = _check_two_j(two_j)
    return 0.5 + (two_j / 2) / (two_j + 1) * decay_factor(two_j) ** n


def initial_slope_directional(two_j: int) -> float:
    """``P(1) - P(0) = -2j / (2j+1)^3``."""
    two_j = _check_two_j(two_j)
    return -two_j / (two_j + 1) ** 3


def _large_j_iterate(two_j: int, n: int, length: int) -> np.ndarray:
    """Iterate the large-j limit recurrence from ``x = 0`` on ``length`` sites."""
    a = 1.0 / two_j
    x = np.arange(length, dtype=float)
    p = np.zeros(length)
    p[0] = 1.0
    for _ in range(n):
        new = (1.0 - a * (2 * x + 1)) * p
        new[1:] += a * x[1:] * p[:-1]
        new[:-1] += a * (x[:-1] + 1) * p[1:]
        p = new
    return p


def closed_form_populations(two_j: int, n: int, *, return_method: bool = False):
    """Populations after ``n`` uses in the large-j limit, from ``|j, j>``.

    Evaluates the alternating finite sum
    ``rho_xx = sum_{k=x}^{n} (-1)^(k+x) C(n,k) C(k,x) k! / (2j)^k``
    in log space. Valid when ``j >> 1`` and ``n`` well below ``2j``; outside
    that regime the limit recurrence itself stops being a good model (entries
    can leave ``[0, 1]``) and the result is returned unvalidated.

    When any entry's estimated relative rounding error exceeds 1e-8 the whole
    vector is recomputed by iterating the limit recurrence. With
    ``return_method=True`` a ``(populations, method)`` pair is returned where
    method is ``"sum"`` or ``"recurrence"``.
    """
    two_j = _check_two_j(two_j)
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    dim = two_j + 1
    top = min(n, two_j)
    out = np.zeros(dim)
    method = "sum"
    k = np.arange(n + 1, dtype=float)
    # log C(n,k) + log k! - k log(2j), shared by every x
    base = log_binomial_array(n, k) + np.array([math.lgamma(v + 1) for v in k]) - k * math.log(two_j)
    for x in range(top + 1):
        ks = k[x:]
        logs = base[x:] + log_binomial_array(ks, x)
        signs = np.where((ks - x) % 2 == 0, 1.0, -1.0)
        value, rel_err = signed_log_sum(logs, signs)
        if rel_err > CLOSED_FORM_MAX_REL_ERR and abs(value) > 1e-300:
            method = "recurrence"
            break
        out[x] = value
    if method == "recurrence":
        out = _large_j_iterate(two_j, n, n + 2)[:dim]
        if out.size < dim:
            out = np.pad(out, (0, dim - out.size))
    if return_method:
        return out, method
    return out


@dataclass(frozen=True)
class DegradationTrace:
    steps: np.ndarray
    success_probability: np.ndarray

    def __post_init__(self):
        if len(self.steps) != len(self.success_probability):
            raise ValueError("steps and success_probability must have equal length")


def simulate_directional(initial: SpinRFState, n_steps: int) -> DegradationTrace:
    """Success probability after 0..n_steps uses, by iterating the update map."""
    step = update_diagonal if initial.is_diagonal else update_full
    values = [success_probability_directional(initial)]
    state = initial
    for _ in range(n_steps):
        state = step(state)
        values.append(success_probability_directional(state))
    return DegradationTrace(np.arange(n_steps + 1), np.array(values))
