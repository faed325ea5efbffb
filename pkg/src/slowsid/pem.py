"""Prediction-error fitting of rational models to slow-sampled multisine data.

The predictor only needs the model's frequency response at the excited lines,
``yhat(kh, theta) = zeta(kh)^H G(theta)``, so aliasing enters solely through the
regressor. Parameters are ``theta = [a0, ..., a_{n-1}, b0, ..., b_m]`` for the
model ``(b0 + ... + b_m p^m) / (a0 + ... + a_{n-1} p^{n-1} + p^n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .exceptions import PoleOnExcitedLine
from .frf import FrfEstimate
from .lti import RationalTransferFunction
from .signals import (
    FoldedLine,
    MultisineSignal,
    SamplingGrid,
    default_tolerance,
    fold_frequency,
    regressor_matrix,
    signed_frequencies,
)

__all__ = [
    "ModelStructure",
    "ParameterVector",
    "GaussNewtonOptions",
    "FitResult",
    "IdentifiabilityReport",
    "model_frf_vector",
    "predictor",
    "cost_time",
    "cost_freq",
    "jacobian",
    "gauss_newton",
    "identifiability_rank",
]

POLE_GUARD = 1e-14


@dataclass(frozen=True)
class ModelStructure:
    numerator_degree: int
    denominator_degree: int

    def __post_init__(self):
        if self.numerator_degree < 0 or self.denominator_degree < self.numerator_degree:
            raise ValueError("model must be proper with nonnegative degrees")

    @property
    def n_params(self) -> int:
        return self.numerator_degree + self.denominator_degree + 1

    @property
    def names(self) -> list[str]:
        return [f"a{i}" for i in range(self.denominator_degree)] + [
            f"b{i}" for i in range(self.numerator_degree + 1)
        ]

    def split(self, theta):
        theta = np.asarray(theta, dtype=float)
        n = self.denominator_degree
        a = np.append(theta[:n], 1.0)
        b = theta[n:]
        return b, a

    def theta_of(self, g: RationalTransferFunction) -> np.ndarray:
        """Parameter vector of ``g``, zero-padding the numerator if needed."""
        if g.order != self.denominator_degree or len(g.numerator) > self.numerator_degree + 1:
            raise ValueError("transfer function does not fit this model structure")
        b = np.zeros(self.numerator_degree + 1)
        b[: len(g.numerator)] = g.numerator
        return np.concatenate([g.den[:-1], b])


@dataclass(frozen=True, eq=False)
class ParameterVector:
    structure: ModelStructure
    theta: np.ndarray

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float).reshape(-1)
        if theta.size != self.structure.n_params:
            raise ValueError(
                f"expected {self.structure.n_params} parameters, got {theta.size}"
            )
        object.__setattr__(self, "theta", theta)

    def transfer_function(self) -> RationalTransferFunction:
        b, a = self.structure.split(self.theta)
        return RationalTransferFunction(tuple(b), tuple(a), require_stable=False)

    def with_theta(self, theta) -> "ParameterVector":
        return ParameterVector(self.structure, theta)


@dataclass(frozen=True)
class GaussNewtonOptions:
    max_iterations: int = 100
    step_tolerance: float = 1e-10
    residual_tolerance: float = 1e-12
    damping: float = 0.0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if not (self.step_tolerance > 0 and self.residual_tolerance > 0):
            raise ValueError("tolerances must be positive")
        if self.damping < 0:
            raise ValueError("damping must be nonnegative")


@dataclass(eq=False)
class FitResult:
    theta_hat: ParameterVector
    cost_trajectory: np.ndarray
    converged: bool
    iterations_used: int
    final_cost: float
    damping_used: bool = False
    diverged: bool = False
    stable: bool = True
    message: str = ""


@dataclass(frozen=True)
class IdentifiabilityReport:
    rank: int
    lines: tuple[FoldedLine, ...] = field(default_factory=tuple)


def _polyval(c, s):
    acc = np.zeros_like(s)
    for x in c[::-1]:
        acc = acc * s + x
    return acc


def _frf_and_parts(structure: ModelStructure, theta, s):
    b, a = structure.split(theta)
    B = _polyval(b, s)
    A = _polyval(a, s)
    if np.any(np.abs(A) < POLE_GUARD):
        bad = np.abs(s[np.abs(A) < POLE_GUARD].imag)
        raise PoleOnExcitedLine(f"model has a pole at excited frequency {bad[0]:.6g} rad/s")
    return B / A, B, A


def model_frf_vector(theta: ParameterVector, u: MultisineSignal) -> np.ndarray:
    """Model response at ``[0, -w1, w1, ..., -wM, wM]`` (rad/s)."""
    s = 1j * signed_frequencies(u)
    return _frf_and_parts(theta.structure, theta.theta, s)[0]


def _frf_gradient(structure: ModelStructure, theta, s):
    # dG/da_i = -s^i B/A^2, dG/db_i = s^i / A
    G, B, A = _frf_and_parts(structure, theta, s)
    n = structure.denominator_degree
    powers = s[:, None] ** np.arange(max(n, structure.numerator_degree + 1))
    dA = -powers[:, :n] * (G / A)[:, None]
    dB = powers[:, : structure.numerator_degree + 1] / A[:, None]
    return G, np.hstack([dA, dB])


def predictor(theta: ParameterVector, u: MultisineSignal, grid: SamplingGrid) -> np.ndarray:
    """One-step (here: noiseless steady-state) prediction ``yhat(kh, theta)``."""
    return (regressor_matrix(u, grid).conj() @ model_frf_vector(theta, u)).real


def cost_time(theta: ParameterVector, u: MultisineSignal, grid: SamplingGrid, y) -> float:
    r = np.asarray(y, dtype=float) - predictor(theta, u, grid)
    return float(r @ r)


def cost_freq(theta: ParameterVector, frf_estimate: FrfEstimate, u: MultisineSignal) -> float:
    """Covariance-weighted FRF misfit ``d^H Cov^-1 d``, ``d = G(theta) - Ghat``."""
    d = model_frf_vector(theta, u) - frf_estimate.values
    try:
        factor = scipy.linalg.cho_factor(frf_estimate.covariance)
    except np.linalg.LinAlgError as exc:
        raise ValueError("FRF covariance is singular") from exc
    return float(np.real(d.conj() @ scipy.linalg.cho_solve(factor, d)))


def jacobian(theta: ParameterVector, u: MultisineSignal, grid: SamplingGrid) -> np.ndarray:
    """Analytic ``d yhat(kh) / d theta_j`` as an ``N x n_theta`` real array."""
    s = 1j * signed_frequencies(u)
    dG = _frf_gradient(theta.structure, theta.theta, s)[1]
    return (regressor_matrix(u, grid).conj() @ dG).real


def gauss_newton(
    theta_init: ParameterVector,
    u: MultisineSignal,
    grid: SamplingGrid,
    y,
    opts: GaussNewtonOptions | None = None,
) -> FitResult:
    """Minimise ``sum_k (y(kh) - yhat(kh, theta))^2`` by Gauss-Newton.

    Each step solves the linearised least-squares problem on column-scaled
    Jacobians (mathematically the undamped normal-equation update). A step that
    would increase the cost, or a numerically rank-deficient Jacobian, switches
    the fit to Levenberg damping for the rest of the run, so the recorded cost
    trajectory never increases. Stops on a relative step below
    ``step_tolerance``, a relative cost decrease below ``residual_tolerance``,
    or after ``max_iterations``.
    """
    opts = opts or GaussNewtonOptions()
    structure = theta_init.structure
    y = np.asarray(y, dtype=float)
    zc = regressor_matrix(u, grid).conj()
    s = 1j * signed_frequencies(u)
    eps = np.finfo(float).eps
    floor = eps**2 * float(y @ y)

    def residual(th):
        G = _frf_and_parts(structure, th, s)[0]
        return y - (zc @ G).real

    def finish(th, traj, converged, it, damped, diverged=False, msg=""):
        pv = theta_init.with_theta(th)
        try:
            stable = pv.transfer_function().is_stable()
        except ValueError:
            stable = False
        return FitResult(pv, np.array(traj), converged, it, float(traj[-1]),
                         damped, diverged, stable, msg)

    theta = theta_init.theta.copy()
    r = residual(theta)
    cost = float(r @ r)
    traj = [cost]
    if not math.isfinite(cost):
        return finish(theta, traj, False, 0, False, True, "non-finite initial cost")
    if cost <= floor:
        return finish(theta, traj, True, 0, False, msg="initial cost at round-off floor")

    lam = opts.damping
    damped = lam > 0
    for it in range(1, opts.max_iterations + 1):
        dG = _frf_gradient(structure, theta, s)[1]
        J = (zc @ dG).real
        scale = np.linalg.norm(J, axis=0)
        scale[scale == 0] = 1.0
        Js = J / scale
        sv = np.linalg.svd(Js, compute_uv=False)

        new = None
        if lam == 0:
            if sv[-1] > sv[0] * 1e3 * eps * max(Js.shape):
                step = np.linalg.lstsq(Js, r, rcond=None)[0] / scale
                cand = theta + step
                try:
                    rc = residual(cand)
                    cc = float(rc @ rc)
                except PoleOnExcitedLine:
                    cc = math.inf
                if math.isfinite(cc) and cc <= cost:
                    new, r_new, c_new = cand, rc, cc
            if new is None:
                lam = 1e-3 * sv[0] ** 2
                damped = True

        if new is None:
            H = Js.T @ Js
            g = Js.T @ r
            eye = np.eye(H.shape[0])
            for _ in range(40):
                step = scipy.linalg.solve(H + lam * eye, g, assume_a="pos") / scale
                cand = theta + step
                try:
                    rc = residual(cand)
                    cc = float(rc @ rc)
                except PoleOnExcitedLine:
                    cc = math.inf
                if math.isfinite(cc) and cc < cost:
                    new, r_new, c_new = cand, rc, cc
                    lam = max(lam / 10, 1e-12 * sv[0] ** 2)
                    break
                lam *= 10
            if new is None:
                return finish(theta, traj, True, it, damped,
                              msg="no cost-decreasing step; at a local minimum")

        rel_step = np.linalg.norm(new - theta) / (np.linalg.norm(theta) + eps)
        rel_drop = (cost - c_new) / cost if cost > 0 else 0.0
        theta, r, cost = new, r_new, c_new
        traj.append(cost)
        if rel_step <= opts.step_tolerance:
            return finish(theta, traj, True, it, damped, msg="step tolerance reached")
        if rel_drop <= opts.residual_tolerance or cost <= floor:
            return finish(theta, traj, True, it, damped, msg="cost tolerance reached")
    return finish(theta, traj, False, opts.max_iterations, damped,
                  msg="maximum iterations reached")


def identifiability_rank(
    u: MultisineSignal, h: float, tol: float | None = None
) -> IdentifiabilityReport:
    """Number of distinct excited lines in the fundamental band ``[-pi/h, pi/h)``.

    DC counts once, each distinct folded line strictly between DC and Nyquist
    counts twice (its +-pair), and a line folding onto Nyquist counts once. A
    component folding onto DC, or onto an earlier component, adds nothing.
    This is the largest number of parameters that can be estimated
    consistently.
    """
    if tol is None:
        tol = default_tolerance(h)
    nyq = math.pi / h
    lines = []
    seen: list[tuple[float, int]] = []
    rank = 1
    for l, w in enumerate(u.frequencies, start=1):
        fl = fold_frequency(float(w), h, tol)
        f = fl.folded_frequency
        if f <= tol:
            lines.append(fl._replace(classification="at_nyquist_multiple", overlaps_with=0))
            continue
        match = next((idx for g, idx in seen if abs(g - f) <= tol), None)
        if match is not None:
            lines.append(fl._replace(classification="overlaps", overlaps_with=match))
            continue
        seen.append((f, l))
        lines.append(fl)
        rank += 1 if abs(f - nyq) <= tol else 2
    return IdentifiabilityReport(rank, tuple(lines))
