"""Ising model on the cycle Z/nZ: parameters, initial conditions, exact Gibbs measure.

Sites are indexed 0..n-1 and spins are stored as int8 arrays of +/-1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from glauber1d.errors import InvalidParameterError

__all__ = [
    "InitialConditionKind",
    "ModelParams",
    "as_spins",
    "gibbs_log_weight",
    "make_initial",
    "pair_correlation",
    "partition_function",
    "sample_gibbs",
    "theta_of_beta",
]


def theta_of_beta(beta: float) -> float:
    """Oblivious-refresh probability ``1 - tanh(2 beta)``."""
    if not math.isfinite(beta) or beta < 0:
        raise InvalidParameterError(f"beta must be finite and non-negative, got {beta!r}")
    return 1.0 - math.tanh(2.0 * beta)


@dataclass(frozen=True)
class ModelParams:
    n: int
    beta: float
    theta: float = field(init=False)

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 2:
            raise InvalidParameterError(f"n must be an integer >= 2, got {self.n!r}")
        if self.n % 2:
            raise InvalidParameterError(f"n must be even, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "beta", float(self.beta))
        theta = theta_of_beta(self.beta)
        if theta <= 0.0:
            # tanh(2 beta) rounds to 1 in double precision
            raise InvalidParameterError(f"beta={self.beta} too large: theta underflows to 0")
        object.__setattr__(self, "theta", theta)

    def require_multiple_of_four(self, what: str) -> None:
        if self.n % 4:
            raise InvalidParameterError(f"{what} requires n divisible by 4, got n={self.n}")


class InitialConditionKind(enum.Enum):
    ALT = "alt"
    BLT = "blt"
    PLUS = "plus"
    UNIFORM_RANDOM = "annealed"
    ANNEALED = "annealed"  # alias: a fresh uniform draw per replica

    @property
    def deterministic(self) -> bool:
        return self is not InitialConditionKind.UNIFORM_RANDOM


def as_spins(x, n: int | None = None) -> np.ndarray:
    """Validate and return a +/-1 configuration as an int8 array."""
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise InvalidParameterError(f"configuration must be one-dimensional, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise InvalidParameterError(f"configuration has length {arr.shape[0]}, expected {n}")
    if not np.all((arr == 1) | (arr == -1)):
        raise InvalidParameterError("configuration entries must be +1 or -1")
    return arr.astype(np.int8)


def make_initial(kind: InitialConditionKind | str, n: int, rng: np.random.Generator | None = None) -> np.ndarray:
    kind = InitialConditionKind(kind) if isinstance(kind, str) else kind
    if n < 2 or n % 2:
        raise InvalidParameterError(f"n must be even and >= 2, got {n}")
    idx = np.arange(n)
    if kind is InitialConditionKind.ALT:
        return np.where(idx % 2 == 0, 1, -1).astype(np.int8)
    if kind is InitialConditionKind.BLT:
        if n % 4:
            raise InvalidParameterError(f"bi-alternating start requires n divisible by 4, got {n}")
        r = idx % 4
        return np.where((r == 0) | (r == 3), 1, -1).astype(np.int8)
    if kind is InitialConditionKind.PLUS:
        return np.ones(n, dtype=np.int8)
    if rng is None:
        raise InvalidParameterError("a random generator is required for a uniform random start")
    return (2 * rng.integers(0, 2, size=n) - 1).astype(np.int8)


def gibbs_log_weight(x, p: ModelParams) -> float:
    """Unnormalised log-probability ``beta * sum_i x(i) x(i+1)``."""
    s = as_spins(x, p.n).astype(np.int64)
    return p.beta * float(np.dot(s, np.roll(s, -1)))


def partition_function(p: ModelParams) -> float:
    """Log partition function from the two transfer-matrix eigenvalues.

    ``Z = (2 cosh b)^n + (2 sinh b)^n``; returned as ``log Z``.
    """
    if p.n < 3:
        raise InvalidParameterError("partition function needs n >= 3")
    t = math.tanh(p.beta)
    return p.n * math.log(2.0 * math.cosh(p.beta)) + math.log1p(t**p.n)


def pair_correlation(p: ModelParams, d: int) -> float:
    """Stationary spin-spin correlation ``E[Y(i) Y(i+d)]`` on the cycle."""
    if not 1 <= d <= p.n - 1:
        raise InvalidParameterError(f"distance must lie in [1, n-1], got {d}")
    t = math.tanh(p.beta)
    return (t**d + t ** (p.n - d)) / (1.0 + t**p.n)


def sample_gibbs(p: ModelParams, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Exact samples from the Gibbs measure by transfer-matrix conditioning.

    Site 0 is a fair coin (no external field). Given site 0 = s0 and site
    i-1 = a, site i takes value b with probability proportional to
    ``exp(beta a b) * (1 + b s0 tanh(beta)^(n-i))``, the normalised column of
    the transfer-matrix power that closes the cycle.

    Returns shape ``(n,)`` when ``size`` is None, else ``(size, n)``.
    """
    if p.n < 3:
        raise InvalidParameterError("Gibbs sampler needs n >= 3")
    m = 1 if size is None else int(size)
    t = math.tanh(p.beta)
    e_same, e_diff = math.exp(p.beta), math.exp(-p.beta)
    out = np.empty((m, p.n), dtype=np.int8)
    out[:, 0] = 2 * rng.integers(0, 2, size=m) - 1
    u = rng.random((m, p.n))
    s0 = out[:, 0].astype(np.float64)
    for i in range(1, p.n):
        a = out[:, i - 1]
        closing = t ** (p.n - i)
        w_plus = np.where(a > 0, e_same, e_diff) * (1.0 + s0 * closing)
        w_minus = np.where(a > 0, e_diff, e_same) * (1.0 - s0 * closing)
        out[:, i] = np.where(u[:, i] * (w_plus + w_minus) < w_plus, 1, -1)
    return out[0] if size is None else out
