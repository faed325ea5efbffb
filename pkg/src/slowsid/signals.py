"""Multisine excitations, their complex regressors and aliasing bookkeeping.

A multisine ``u(t) = a0 + sum_l a_l cos(w_l t + phi_l)`` sampled at
``t = h, 2h, ..., Nh`` is linear in the frequency response of any LTI system
it drives. The regressor vector stacks, for each sample instant, the DC level
followed by the ``(+w, -w)`` phasor pair of every component::

    zeta(kh) = [a0, a1/2 e^{+i(w1 kh + phi1)}, a1/2 e^{-i(w1 kh + phi1)}, ...]

and the matching frequency response vector is ordered
``[G(0), G(-i w1), G(i w1), ..., G(-i wM), G(i wM)]`` so that the noiseless
output is ``zeta(kh)^H G``.

Component indices in overlap reports are 1-based (``l = 1..M``), matching the
regressor layout where component ``l`` occupies entries ``2l-1`` and ``2l``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "Component",
    "MultisineSignal",
    "SamplingGrid",
    "FoldedLine",
    "Violation",
    "OverlapReport",
    "default_tolerance",
    "evaluate_multisine",
    "regressor",
    "regressor_matrix",
    "signed_frequencies",
    "fold_frequency",
    "check_non_overlap",
    "check_no_leakage",
    "dtft",
]


class Component(NamedTuple):
    amplitude: float
    angular_frequency: float
    phase: float = 0.0


@dataclass(frozen=True)
class MultisineSignal:
    """DC level plus ``M`` cosines with strictly increasing frequencies (rad/s)."""

    dc_amplitude: float
    components: tuple[Component, ...] = ()

    def __post_init__(self):
        comps = tuple(Component(*map(float, c)) for c in self.components)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "dc_amplitude", float(self.dc_amplitude))
        if self.dc_amplitude == 0.0:
            raise ValueError("dc_amplitude must be nonzero")
        prev = 0.0
        for i, c in enumerate(comps, start=1):
            if c.amplitude == 0.0:
                raise ValueError(f"component {i} has zero amplitude")
            if not math.isfinite(c.angular_frequency) or c.angular_frequency <= prev:
                raise ValueError(
                    "angular frequencies must be positive and strictly increasing"
                )
            prev = c.angular_frequency

    @classmethod
    def from_arrays(cls, dc_amplitude, amplitudes, frequencies, phases=None):
        amplitudes = np.broadcast_to(np.asarray(amplitudes, dtype=float), np.shape(frequencies))
        if phases is None:
            phases = np.zeros(len(frequencies))
        return cls(
            dc_amplitude,
            tuple(Component(a, w, p) for a, w, p in zip(amplitudes, frequencies, phases)),
        )

    @property
    def M(self) -> int:
        return len(self.components)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([c.amplitude for c in self.components], dtype=float)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([c.angular_frequency for c in self.components], dtype=float)

    @property
    def phases(self) -> np.ndarray:
        return np.array([c.phase for c in self.components], dtype=float)


@dataclass(frozen=True)
class SamplingGrid:
    period: float
    count: int

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("sampling period must be positive")
        if int(self.count) != self.count or self.count < 1:
            raise ValueError("sample count must be a positive integer")
        object.__setattr__(self, "period", float(self.period))
        object.__setattr__(self, "count", int(self.count))

    @property
    def nyquist(self) -> float:
        return math.pi / self.period

    def times(self) -> np.ndarray:
        """Sample instants ``h, 2h, ..., Nh``."""
        return self.period * np.arange(1, self.count + 1)


class FoldedLine(NamedTuple):
    original_frequency: float
    folded_frequency: float
    # "distinct", "overlaps" or "at_nyquist_multiple"
    classification: str
    overlaps_with: int | None = None
    nyquist_multiple: int | None = None


class Violation(NamedTuple):
    first: int
    # 1-based component index, or "nyquist" for the w_l = n pi/h condition
    second: int | str
    n: int
    kind: str  # "difference", "sum" or "nyquist"


@dataclass(frozen=True)
class OverlapReport:
    satisfied: bool
    violations: tuple[Violation, ...]

    def __bool__(self):
        return self.satisfied


def default_tolerance(h: float) -> float:
    """Frequency tolerance (rad/s) used for modular comparisons at period ``h``."""
    return 1e-9 * (2 * math.pi / h)


def evaluate_multisine(u: MultisineSignal, t):
    """Evaluate ``u`` at time(s) ``t``; scalar in, scalar out."""
    t_arr = np.asarray(t, dtype=float)
    out = np.full(t_arr.shape, u.dc_amplitude)
    for c in u.components:
        out = out + c.amplitude * np.cos(c.angular_frequency * t_arr + c.phase)
    if out.ndim == 0:
        return float(out)
    return out


def signed_frequencies(u: MultisineSignal) -> np.ndarray:
    """Frequencies matching the FRF vector layout: ``[0, -w1, w1, ..., -wM, wM]``."""
    w = u.frequencies
    out = np.zeros(2 * u.M + 1)
    out[1::2] = -w
    out[2::2] = w
    return out


def regressor_matrix(u: MultisineSignal, grid: SamplingGrid) -> np.ndarray:
    """Stack ``zeta(kh)`` for ``k = 1..N`` as rows of an ``N x (2M+1)`` array."""
    t = grid.times()
    out = np.empty((grid.count, 2 * u.M + 1), dtype=complex)
    out[:, 0] = u.dc_amplitude
    if u.M:
        arg = np.outer(t, u.frequencies) + u.phases
        ph = 0.5 * u.amplitudes * np.exp(1j * arg)
        out[:, 1::2] = ph
        out[:, 2::2] = ph.conj()
    return out


def regressor(u: MultisineSignal, grid: SamplingGrid, k: int) -> np.ndarray:
    """The regressor ``zeta(kh)`` for a single 1-based sample index ``k``."""
    if not 1 <= k <= grid.count:
        raise IndexError(f"sample index {k} outside 1..{grid.count}")
    t = k * grid.period
    out = np.empty(2 * u.M + 1, dtype=complex)
    out[0] = u.dc_amplitude
    for l, c in enumerate(u.components, start=1):
        ph = 0.5 * c.amplitude * np.exp(1j * (c.angular_frequency * t + c.phase))
        out[2 * l - 1] = ph
        out[2 * l] = np.conj(ph)
    return out


def _fold(omega: float, h: float) -> float:
    band = 2 * math.pi / h
    r = math.fmod(omega, band)
    if r < 0:
        r += band
    return min(r, band - r)


def fold_frequency(omega: float, h: float, tol: float | None = None) -> FoldedLine:
    """Map ``omega`` to its alias magnitude in ``[0, pi/h]``.

    The line is classified ``at_nyquist_multiple`` when ``omega`` lies within
    ``tol`` of some ``n pi / h``; such a line aliases onto DC (even ``n``) or
    onto the Nyquist line itself (odd ``n``).
    """
    if omega < 0:
        raise ValueError("omega must be nonnegative")
    if tol is None:
        tol = default_tolerance(h)
    folded = _fold(omega, h)
    n = round(omega * h / math.pi)
    if abs(omega - n * math.pi / h) <= tol:
        return FoldedLine(omega, folded, "at_nyquist_multiple", nyquist_multiple=n)
    return FoldedLine(omega, folded, "distinct")


def check_non_overlap(
    u: MultisineSignal, h: float, tol: float | None = None
) -> OverlapReport:
    """Check that no two excited lines coincide after aliasing.

    A violation is recorded when ``w_l - w_t`` or ``w_l + w_t`` is within
    ``tol`` of a multiple of ``2 pi / h`` (``l < t``), or when ``w_l`` is within
    ``tol`` of a multiple of ``pi / h``. The nearest integer multiple is the only
    candidate that can be within ``tol``, so it is computed directly.
    """
    if tol is None:
        tol = default_tolerance(h)
    if not tol > 0:
        raise ValueError("tol must be positive")
    band = 2 * math.pi / h
    w = u.frequencies
    violations = []
    for i in range(u.M):
        for j in range(i + 1, u.M):
            for kind, s in (("difference", w[j] - w[i]), ("sum", w[j] + w[i])):
                n = round(s / band)
                if abs(s - n * band) <= tol:
                    violations.append(Violation(i + 1, j + 1, int(n), kind))
        n = round(w[i] / (band / 2))
        if abs(w[i] - n * band / 2) <= tol:
            violations.append(Violation(i + 1, "nyquist", int(n), "nyquist"))
    return OverlapReport(not violations, tuple(violations))


def check_no_leakage(
    u: MultisineSignal, grid: SamplingGrid, tol: float | None = None
) -> bool:
    """True when every excited frequency sits on a DFT bin ``2 pi n / (N h)``.

    This is the bin-integrality form of "the record length is a common multiple
    of all component periods". ``tol`` is in rad/s.
    """
    if tol is None:
        tol = default_tolerance(grid.period)
    if not tol > 0:
        raise ValueError("tol must be positive")
    spacing = 2 * math.pi / (grid.count * grid.period)
    bins = u.frequencies / spacing
    return bool(np.all(np.abs(bins - np.round(bins)) * spacing <= tol))


def dtft(samples: Sequence[float], omega, h: float):
    """``sum_{k=1}^N x[k] e^{-i h k omega}`` for scalar or array ``omega``."""
    x = np.asarray(samples)
    if x.ndim != 1 or x.size < 1:
        raise ValueError("samples must be a nonempty 1-D sequence")
    k = np.arange(1, x.size + 1)
    om = np.asarray(omega, dtype=float)
    out = np.exp(-1j * h * np.multiply.outer(om, k)) @ x
    if om.ndim == 0:
        return complex(out)
    return out
