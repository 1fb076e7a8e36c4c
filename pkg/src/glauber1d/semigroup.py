"""Rate-1 simple random walk semigroup on the cycle and the killed-walk magnetisation.

The generator ``(Lf)(i) = (f(i-1) + f(i+1))/2 - f(i)`` is diagonalised by the
real trigonometric basis; mode ``k`` decays at rate ``1 - cos(2 pi k / n)``.
Coefficients are ordered ``[const, cos 1, sin 1, cos 2, sin 2, ..., (alt)]``
with the alternating mode last when ``n`` is even.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from glauber1d.errors import InvalidParameterError
from glauber1d.model import InitialConditionKind, ModelParams, as_spins

__all__ = [
    "SpectralVector",
    "autocorrelation_l2_prediction",
    "conditional_magnetization",
    "from_spectral",
    "mixing_constant",
    "predicted_mixing_constant",
    "semigroup_apply",
    "spectral_rates",
    "to_spectral",
    "trig_basis",
    "walk_eigenvalues",
]


def walk_eigenvalues(n: int) -> np.ndarray:
    """Decay rates ``1 - cos(2 pi k / n)`` for ``k = 0..n-1``."""
    if n < 3:
        raise InvalidParameterError(f"cycle needs n >= 3, got {n}")
    k = np.arange(n)
    return 1.0 - np.cos(2.0 * np.pi * k / n)


def _frequencies(n: int) -> np.ndarray:
    """Frequency index of each real-basis coefficient in the stored order."""
    freq = [0]
    for k in range(1, (n - 1) // 2 + 1):
        freq += [k, k]
    if n % 2 == 0:
        freq.append(n // 2)
    return np.asarray(freq)


def spectral_rates(n: int) -> np.ndarray:
    """Decay rate of each coefficient of a ``SpectralVector`` of length ``n``."""
    return walk_eigenvalues(n)[_frequencies(n)]


@dataclass(frozen=True)
class SpectralVector:
    coefficients: np.ndarray
    rates: np.ndarray

    @property
    def n(self) -> int:
        return len(self.coefficients)


def to_spectral(x) -> SpectralVector:
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    f = np.fft.rfft(x)
    c = np.empty(n)
    c[0] = f[0].real / math.sqrt(n)
    kmax = (n - 1) // 2
    scale = math.sqrt(2.0 / n)
    c[1 : 2 * kmax + 1 : 2] = scale * f[1 : kmax + 1].real
    c[2 : 2 * kmax + 2 : 2] = -scale * f[1 : kmax + 1].imag
    if n % 2 == 0:
        c[-1] = f[n // 2].real / math.sqrt(n)
    return SpectralVector(c, spectral_rates(n))


def from_spectral(v: SpectralVector) -> np.ndarray:
    c = np.asarray(v.coefficients, dtype=np.float64)
    n = len(c)
    f = np.zeros(n // 2 + 1, dtype=np.complex128)
    f[0] = c[0] * math.sqrt(n)
    kmax = (n - 1) // 2
    scale = math.sqrt(n / 2.0)
    f[1 : kmax + 1] = scale * (c[1 : 2 * kmax + 1 : 2] - 1j * c[2 : 2 * kmax + 2 : 2])
    if n % 2 == 0:
        f[n // 2] = c[-1] * math.sqrt(n)
    return np.fft.irfft(f, n)


def trig_basis(n: int) -> np.ndarray:
    """Dense orthonormal basis, one eigenvector per row, in the stored order."""
    j = np.arange(n)
    rows = [np.full(n, 1.0 / math.sqrt(n))]
    for k in range(1, (n - 1) // 2 + 1):
        rows.append(math.sqrt(2.0 / n) * np.cos(2 * np.pi * k * j / n))
        rows.append(math.sqrt(2.0 / n) * np.sin(2 * np.pi * k * j / n))
    if n % 2 == 0:
        rows.append(np.where(j % 2 == 0, 1.0, -1.0) / math.sqrt(n))
    return np.vstack(rows)


def semigroup_apply(x, t: float, n: int | None = None) -> np.ndarray:
    """``P_t x`` for the rate-1 simple random walk on the cycle."""
    if t < 0:
        raise InvalidParameterError(f"time must be non-negative, got {t}")
    x = np.asarray(x, dtype=np.float64)
    if n is not None and x.shape[-1] != n:
        raise InvalidParameterError(f"vector has length {x.shape[-1]}, expected {n}")
    v = to_spectral(x)
    return from_spectral(SpectralVector(v.coefficients * np.exp(-v.rates * t), v.rates))


def conditional_magnetization(x0, t: float, p: ModelParams) -> np.ndarray:
    """``E_{x0}[X_t(i)] = exp(-theta t) (P_{(1-theta) t} x0)(i)``."""
    x0 = as_spins(x0, p.n)
    return math.exp(-p.theta * t) * semigroup_apply(x0, (1.0 - p.theta) * t, p.n)


def autocorrelation_l2_prediction(x0, t: float, p: ModelParams) -> float:
    """Mean of the autocorrelation statistic under ``P_{x0}``: ``||E_{x0} X_t||_2^2``."""
    m = conditional_magnetization(x0, t, p)
    return float(np.dot(m, m))


def mixing_constant(kind: InitialConditionKind | str, theta):
    """Coefficient of ``log n`` in the asymptotic mixing time.

    Works with floats or ``fractions.Fraction`` (exact arithmetic).
    """
    kind = InitialConditionKind(kind) if isinstance(kind, str) else kind
    one = Fraction(1) if isinstance(theta, Fraction) else 1.0
    if not 0 < theta <= 1:
        raise InvalidParameterError(f"theta must lie in (0, 1], got {theta}")
    if kind is InitialConditionKind.ALT:
        return max(one / (4 - 2 * theta), one / (4 * theta))
    if kind is InitialConditionKind.BLT:
        return max(one / 2, one / (4 * theta))
    if kind is InitialConditionKind.PLUS:
        return one / (2 * theta)
    return one / (4 * theta)


def predicted_mixing_constant(kind: InitialConditionKind | str, p: ModelParams) -> float:
    return mixing_constant(kind, p.theta)
