"""Continuous-time rational transfer functions and stationary-regime simulation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .signals import (
    MultisineSignal,
    SamplingGrid,
    regressor_matrix,
    signed_frequencies,
)

__all__ = [
    "RationalTransferFunction",
    "NoiseSpec",
    "freq_response",
    "true_frf_vector",
    "simulate_stationary",
    "add_noise",
    "sigma_for_snr",
    "STABILITY_MARGIN",
]

STABILITY_MARGIN = 1e-12


def _horner(coeffs: np.ndarray, s):
    # ascending coefficients
    acc = np.zeros_like(s, dtype=complex) if np.ndim(s) else 0j
    for c in coeffs[::-1]:
        acc = acc * s + c
    return acc


@dataclass(frozen=True, eq=False)
class RationalTransferFunction:
    """``G(p) = B(p) / A(p)`` with ascending-power coefficients.

    The denominator is normalised to be monic on construction. Properness is
    always enforced; asymptotic stability is enforced unless
    ``require_stable=False`` (used for intermediate parametric models).
    """

    numerator: tuple[float, ...]
    denominator: tuple[float, ...]
    require_stable: bool = True

    def __post_init__(self):
        num = np.trim_zeros(np.atleast_1d(np.asarray(self.numerator, dtype=float)), "b")
        den = np.trim_zeros(np.atleast_1d(np.asarray(self.denominator, dtype=float)), "b")
        if den.size == 0:
            raise ValueError("denominator is identically zero")
        if num.size == 0:
            num = np.zeros(1)
        if not (np.all(np.isfinite(num)) and np.all(np.isfinite(den))):
            raise ValueError("coefficients must be finite")
        if num.size > den.size:
            raise ValueError("transfer function is improper")
        lead = den[-1]
        object.__setattr__(self, "numerator", tuple(num / lead))
        object.__setattr__(self, "denominator", tuple(den / lead))
        if self.require_stable and not self.is_stable():
            raise ValueError(f"system is not asymptotically stable, poles {self.poles()}")

    def __eq__(self, other):
        if not isinstance(other, RationalTransferFunction):
            return NotImplemented
        return self.numerator == other.numerator and self.denominator == other.denominator

    def __hash__(self):
        return hash((self.numerator, self.denominator))

    @property
    def num(self) -> np.ndarray:
        return np.array(self.numerator)

    @property
    def den(self) -> np.ndarray:
        return np.array(self.denominator)

    @property
    def order(self) -> int:
        return len(self.denominator) - 1

    def poles(self) -> np.ndarray:
        if self.order == 0:
            return np.zeros(0, dtype=complex)
        # companion-matrix eigenvalues
        return np.roots(self.den[::-1]).astype(complex)

    def is_stable(self) -> bool:
        return bool(np.all(self.poles().real < -STABILITY_MARGIN))

    def __call__(self, s):
        return _horner(self.num, s) / _horner(self.den, s)


def freq_response(g: RationalTransferFunction, omega):
    """``G(i omega)``; vectorised over ``omega``."""
    s = 1j * np.asarray(omega, dtype=float)
    out = g(s)
    if np.ndim(out) == 0:
        return complex(out)
    return out


def true_frf_vector(g: RationalTransferFunction, u: MultisineSignal) -> np.ndarray:
    """``[G(0), G(-i w1), G(i w1), ..., G(-i wM), G(i wM)]``."""
    out = np.asarray(freq_response(g, signed_frequencies(u)), dtype=complex)
    out[0] = out[0].real
    return out


def simulate_stationary(
    g: RationalTransferFunction, u: MultisineSignal, grid: SamplingGrid
) -> np.ndarray:
    """Noiseless steady-state output samples ``x(kh)``, ``k = 1..N``."""
    x = regressor_matrix(u, grid).conj() @ true_frf_vector(g, u)
    return x.real


@dataclass(frozen=True)
class NoiseSpec:
    standard_deviation: float
    seed: int

    def __post_init__(self):
        if not self.standard_deviation >= 0:
            raise ValueError("standard deviation must be nonnegative")


def add_noise(x, noise: NoiseSpec) -> np.ndarray:
    """``x + v`` with ``v`` i.i.d. N(0, sigma^2) from ``numpy.random.default_rng(seed)``."""
    x = np.asarray(x, dtype=float)
    if noise.standard_deviation == 0:
        return x.copy()
    rng = np.random.default_rng(noise.seed)
    return x + noise.standard_deviation * rng.standard_normal(x.shape)


def sigma_for_snr(x, snr_db: float) -> float:
    """Noise standard deviation giving ``snr_db`` relative to the mean-square of ``x``.

    DC content is part of the signal power.
    """
    x = np.asarray(x, dtype=float)
    power = float(np.mean(x**2))
    if power == 0.0:
        raise ValueError("cannot set an SNR for an all-zero signal")
    return math.sqrt(power / 10 ** (snr_db / 10))
