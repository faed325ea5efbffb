"""Least-squares FRF estimation from slow-sampled multisine data.

The estimator solves ``Z G = sum_k zeta(kh) y(kh)`` with the Hermitian normal
matrix ``Z = sum_k zeta(kh) zeta(kh)^H``. It is well posed exactly when no two
excited lines (DC included) coincide after aliasing, regardless of whether any
frequency exceeds the Nyquist frequency.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import IllConditioned, LeakagePresent, Overlap
from .signals import (
    MultisineSignal,
    SamplingGrid,
    check_no_leakage,
    check_non_overlap,
    default_tolerance,
    dtft,
    regressor_matrix,
    signed_frequencies,
)

__all__ = [
    "COND_LIMIT",
    "FrfEstimate",
    "normal_matrix",
    "ls_frf",
    "ls_frf_frequency_domain",
    "residual_sigma",
    "asymptotic_covariance",
    "etfe_frf",
]

COND_LIMIT = 1.0 / (100 * np.finfo(float).eps)


@dataclass(frozen=True, eq=False)
class FrfEstimate:
    """Estimated FRF vector with its covariance.

    ``covariance`` is ``E[d d^H]`` and ``pseudo_covariance`` is ``E[d d^T]`` for the
    estimation error ``d``; together they give the variances of the real and
    imaginary parts (see :meth:`part_variances`).
    """

    values: np.ndarray
    covariance: np.ndarray
    pseudo_covariance: np.ndarray
    sigma_used: float
    condition_number: float
    omegas: np.ndarray

    def part_variances(self) -> tuple[np.ndarray, np.ndarray]:
        c = np.real(np.diag(self.covariance))
        p = np.real(np.diag(self.pseudo_covariance))
        return (c + p) / 2, np.maximum((c - p) / 2, 0.0)


def normal_matrix(u: MultisineSignal, grid: SamplingGrid) -> np.ndarray:
    """``Z = sum_k zeta(kh) zeta(kh)^H``, symmetrised to be exactly Hermitian."""
    zeta = regressor_matrix(u, grid)
    Z = zeta.T @ zeta.conj()
    return (Z + Z.conj().T) / 2


def _describe(violations):
    parts = []
    for v in violations:
        if v.kind == "nyquist":
            parts.append(f"w{v.first} = {v.n} pi/h")
        else:
            op = "-" if v.kind == "difference" else "+"
            parts.append(f"w{v.second} {op} w{v.first} = {v.n} (2 pi/h)")
    return "; ".join(parts)


def ls_frf(
    u: MultisineSignal,
    grid: SamplingGrid,
    y,
    sigma: float | None = None,
    tol: float | None = None,
) -> FrfEstimate:
    """Least-squares estimate of ``[G(0), G(-i w1), G(i w1), ...]``.

    Parameters
    ----------
    u, grid
        Known excitation and sampling grid.
    y
        ``N`` output samples taken at ``t = h, ..., Nh`` in steady state.
    sigma
        Noise standard deviation used for the reported covariance
        ``sigma^2 Z^-1``. Estimated from the residuals when omitted.
    tol
        Frequency tolerance (rad/s) for the aliasing-overlap check.

    Raises
    ------
    IllConditioned
        If excited lines overlap after aliasing, a frequency is a multiple of
        ``pi/h``, ``N <= 2M``, or ``cond(Z)`` exceeds :data:`COND_LIMIT`.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (grid.count,):
        raise ValueError(f"expected {grid.count} output samples, got {y.shape}")
    if grid.count <= 2 * u.M:
        raise IllConditioned(f"need N > 2M = {2 * u.M} samples, got {grid.count}")

    zeta = regressor_matrix(u, grid)
    Z = zeta.T @ zeta.conj()
    Z = (Z + Z.conj().T) / 2
    cond = float(np.linalg.cond(Z))
    report = check_non_overlap(u, grid.period, tol)
    if not report.satisfied or not cond < COND_LIMIT:
        msg = f"normal matrix is singular or ill-conditioned (cond = {cond:.3g})"
        if report.violations:
            msg += ": " + _describe(report.violations)
        raise IllConditioned(msg, cond, report.violations)
    try:
        factor = scipy.linalg.cho_factor(Z)
    except np.linalg.LinAlgError as exc:
        raise IllConditioned(f"normal matrix is not positive definite: {exc}", cond) from exc

    values = scipy.linalg.cho_solve(factor, zeta.T @ y)
    if sigma is None:
        sigma = residual_sigma(u, grid, y, values)
    Zinv = scipy.linalg.cho_solve(factor, np.eye(Z.shape[0], dtype=complex))
    Zinv = (Zinv + Zinv.conj().T) / 2
    pseudo = Zinv @ (zeta.T @ zeta) @ Zinv.T
    return FrfEstimate(
        values=values,
        covariance=sigma**2 * Zinv,
        pseudo_covariance=sigma**2 * pseudo,
        sigma_used=float(sigma),
        condition_number=cond,
        omegas=signed_frequencies(u),
    )


def ls_frf_frequency_domain(u: MultisineSignal, grid: SamplingGrid, y) -> np.ndarray:
    """Same estimate as :func:`ls_frf`, assembled from DFT-bin spectra.

    Uses ``sum_n Psi_n Psi_n^H`` and ``sum_n Psi_n conj(Y_n)`` over the ``N`` bins
    ``2 pi n / (N h)``, where ``Psi`` and ``Y`` are the DTFTs of the regressor and
    output sequences (k = 1..N convention). No validity checks are made.
    """
    y = np.asarray(y, dtype=float)
    N = grid.count
    shift = np.exp(-2j * np.pi * np.arange(N) / N)
    psi = np.fft.fft(regressor_matrix(u, grid), axis=0) * shift[:, None]
    Y = np.fft.fft(y) * shift
    A = psi.T @ psi.conj()
    b = psi.T @ Y.conj()
    return scipy.linalg.solve(A, b, assume_a="her")


def residual_sigma(u: MultisineSignal, grid: SamplingGrid, y, values) -> float:
    """Noise level estimate ``sqrt(RSS / (N - (2M+1)))``."""
    dof = grid.count - (2 * u.M + 1)
    if dof <= 0:
        raise ValueError("no residual degrees of freedom to estimate sigma")
    fit = (regressor_matrix(u, grid).conj() @ values).real
    r = np.asarray(y, dtype=float) - fit
    return float(np.sqrt(r @ r / dof))


def asymptotic_covariance(u: MultisineSignal, sigma: float) -> np.ndarray:
    """Diagonal of ``lim N Cov`` : ``sigma^2 [1/a0^2, 4/a1^2, 4/a1^2, ...]``."""
    out = np.empty(2 * u.M + 1)
    out[0] = 1 / u.dc_amplitude**2
    out[1::2] = 4 / u.amplitudes**2
    out[2::2] = 4 / u.amplitudes**2
    return sigma**2 * out


def etfe_frf(
    u: MultisineSignal, grid: SamplingGrid, y, tol: float | None = None
) -> np.ndarray:
    """Quotient of output and input DTFTs at the excited (aliased) frequencies.

    The input transform is the analytic one, ``N a0`` at DC and
    ``N a_l/2 e^{+-i phi_l}`` at ``+-w_l``, not the DTFT of the sampled input.
    Requires non-overlapping lines and an integer number of periods of every
    component in the record.
    """
    if tol is None:
        tol = default_tolerance(grid.period)
    report = check_non_overlap(u, grid.period, tol)
    if not report.satisfied:
        raise Overlap("excited lines overlap after aliasing: " + _describe(report.violations),
                      report.violations)
    if not check_no_leakage(u, grid, tol):
        spacing = 2 * np.pi / (grid.count * grid.period)
        bins = u.frequencies / spacing
        bad = u.frequencies[np.abs(bins - np.round(bins)) * spacing > tol]
        raise LeakagePresent(
            "frequencies not on a DFT bin: " + ", ".join(f"{w:.6g}" for w in bad), bad
        )
    y = np.asarray(y, dtype=float)
    if y.shape != (grid.count,):
        raise ValueError(f"expected {grid.count} output samples, got {y.shape}")
    N = grid.count
    Y = dtft(y, signed_frequencies(u), grid.period)
    U = np.empty(2 * u.M + 1, dtype=complex)
    U[0] = N * u.dc_amplitude
    half = 0.5 * N * u.amplitudes
    U[1::2] = half * np.exp(-1j * u.phases)
    U[2::2] = half * np.exp(1j * u.phases)
    return Y / U
