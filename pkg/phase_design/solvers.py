from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Literal, Optional

import numpy as np
import pymanopt
from pydantic import BaseModel, ConfigDict, model_validator
from pymanopt.manifolds import ComplexCircle
from pymanopt.optimizers import ConjugateGradient, SteepestDescent, TrustRegions
from pymanopt.optimizers.optimizer import Optimizer

from channel import ChannelModel, PhaseVector
from geometry import DoA

from .crlb import CrlbObjective, PhaseDesignError
from .snr_max import random_phases

Method = Literal["trust-region", "conjugate-gradient", "steepest-descent"]

HESSIAN_FD_STEP = 1e-4


class ManifoldOptimizerConfig(BaseModel):
    max_iterations: int = 100
    gradient_tolerance: float = 1e-6
    method: Method = "trust-region"
    fd_step: float = 1e-5
    seed: Optional[int] = None
    max_inner_iterations: Optional[int] = None
    min_inner_iterations: int = 1
    rho_prime: float = 0.1
    kappa: float = 0.1
    theta: float = 1.0

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def _validate_optimizer(self) -> "ManifoldOptimizerConfig":
        if self.max_iterations < 1:
            raise ValueError("phase_design.max_iterations must be >= 1")
        if not self.gradient_tolerance > 0:
            raise ValueError("phase_design.gradient_tolerance must be > 0")
        if not self.fd_step > 0:
            raise ValueError("phase_design.fd_step must be > 0")
        if self.max_inner_iterations is not None and self.max_inner_iterations < 1:
            raise ValueError("phase_design.max_inner_iterations must be >= 1")
        if not 0 < self.rho_prime < 0.25:
            raise ValueError("phase_design.rho_prime must be in (0, 0.25)")
        return self

    def optimizer(self) -> Optimizer:
        common = dict(
            max_iterations=self.max_iterations,
            min_gradient_norm=self.gradient_tolerance,
            max_time=math.inf,
            verbosity=0,
        )
        if self.method == "trust-region":
            return TrustRegions(kappa=self.kappa, theta=self.theta, rho_prime=self.rho_prime, **common)
        if self.method == "conjugate-gradient":
            return ConjugateGradient(beta_rule="PolakRibiere", **common)
        return SteepestDescent(**common)

    def run_arguments(self) -> dict:
        if self.method != "trust-region":
            return {}
        return {"mininner": self.min_inner_iterations, "maxinner": self.max_inner_iterations}


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    objective: float
    grad_norm: float


@dataclass(frozen=True)
class ManifoldResult:
    phases: PhaseVector
    objective: float
    initial_objective: float
    trace: List[TraceRow] = field(default_factory=list)
    converged: bool = False
    stop_reason: str = ""

    @property
    def iterations(self) -> int:
        return self.trace[-1].iteration if self.trace else 0

    @property
    def warning(self) -> bool:
        return not self.converged


class ScaledCrlbCost:
    """f(omega)/f(omega0) with finite-difference Euclidean gradient and Hessian.

    The gradient is d f/d Re(omega) + j d f/d Im(omega), the convention the
    complex-circle manifold converts to a Riemannian gradient. Every point at
    which the gradient is requested is appended to ``visited`` so the trace
    follows the accepted iterates.
    """

    def __init__(self, objective: CrlbObjective, omega0: np.ndarray, fd_step: float) -> None:
        self.manifold = ComplexCircle(objective.size)
        self._objective = objective
        self._h = fd_step
        f0 = objective(omega0)
        if not math.isfinite(f0) or f0 <= 0:
            raise PhaseDesignError(f"CRLB objective is not finite at the initial phases ({f0})")
        self.scale = f0
        n = objective.size
        eye = np.eye(n, dtype=np.complex128)
        self._steps = np.concatenate([eye, -eye, 1j * eye, -1j * eye]) * fd_step
        self._last: tuple[bytes, np.ndarray] | None = None
        self.visited: list[tuple[np.ndarray, float, float]] = []

    def cost(self, omega: np.ndarray) -> float:
        return self._objective(omega) / self.scale

    def euclidean_gradient(self, omega: np.ndarray) -> np.ndarray:
        key = omega.tobytes()
        if self._last is not None and self._last[0] == key:
            return self._last[1]
        n = self._objective.size
        values = self._objective.batch(omega[None, :] + self._steps) / self.scale
        real = (values[:n] - values[n : 2 * n]) / (2 * self._h)
        imag = (values[2 * n : 3 * n] - values[3 * n :]) / (2 * self._h)
        grad = real + 1j * imag
        if not np.all(np.isfinite(grad)):
            raise PhaseDesignError("finite-difference gradient hit a degenerate CRLB")
        self._last = (key, grad)
        return grad

    def euclidean_hessian(self, omega: np.ndarray, direction: np.ndarray) -> np.ndarray:
        norm = float(np.linalg.norm(direction))
        if norm == 0:
            return np.zeros_like(omega)
        t = HESSIAN_FD_STEP / norm
        base = self.euclidean_gradient(omega)
        moved = self.euclidean_gradient(omega + t * direction)
        self._last = (omega.tobytes(), base)
        return (moved - base) / t

    def riemannian_gradient_norm(self, omega: np.ndarray) -> float:
        egrad = self.euclidean_gradient(omega)
        return float(self.manifold.norm(omega, self.manifold.euclidean_to_riemannian_gradient(omega, egrad)))

    def visit(self, omega: np.ndarray) -> np.ndarray:
        egrad = self.euclidean_gradient(omega)
        if not self.visited or not np.array_equal(self.visited[-1][0], omega):
            grad_norm = float(self.manifold.norm(omega, self.manifold.euclidean_to_riemannian_gradient(omega, egrad)))
            self.visited.append((omega.copy(), self.cost(omega), grad_norm))
        return egrad

    def problem(self) -> pymanopt.Problem:
        manifold = self.manifold

        @pymanopt.function.numpy(manifold)
        def cost(point):
            return self.cost(point)

        @pymanopt.function.numpy(manifold)
        def euclidean_gradient(point):
            return self.visit(point)

        @pymanopt.function.numpy(manifold)
        def euclidean_hessian(point, tangent_vector):
            return self.euclidean_hessian(point, tangent_vector)

        return pymanopt.Problem(
            manifold,
            cost,
            euclidean_gradient=euclidean_gradient,
            euclidean_hessian=euclidean_hessian,
        )


def _trace(cost: ScaledCrlbCost, final: np.ndarray, verbose: bool) -> list[TraceRow]:
    if not cost.visited or not np.array_equal(cost.visited[-1][0], final):
        cost.visit(final)
    rows = []
    for k, (_, value, grad_norm) in enumerate(cost.visited):
        row = TraceRow(k, value * cost.scale, grad_norm)
        rows.append(row)
        if verbose:
            print(f"[manifold] iter={row.iteration} objective={row.objective:.6e} grad_norm={row.grad_norm:.3e}")
    return rows


def optimize_phases_crlb(
    channel: ChannelModel,
    coarse_doa: DoA,
    sigma_s2: float,
    sigma_n2: float,
    cfg: ManifoldOptimizerConfig | None = None,
    initial: PhaseVector | None = None,
    verbose: bool = False,
) -> ManifoldResult:
    """Minimize CRLB_theta + CRLB_phi over unit-modulus omega.

    Starts from ``initial`` or from uniform random phases drawn with ``cfg.seed``.
    ``converged`` is False when the iteration budget ran out or the step
    control gave up before the gradient norm reached the tolerance.
    """
    cfg = cfg or ManifoldOptimizerConfig()
    if sigma_s2 <= 0 or sigma_n2 <= 0:
        raise PhaseDesignError("sigma_s2 and sigma_n2 must be > 0")
    objective = CrlbObjective(channel, coarse_doa, sigma_s2, sigma_n2)
    start = initial if initial is not None else random_phases(channel.m_r, cfg.seed)
    if start.size != channel.m_r:
        raise PhaseDesignError(f"expected {channel.m_r} initial phases, got {start.size}")
    omega0 = start.omega
    cost = ScaledCrlbCost(objective, omega0, cfg.fd_step)

    # pymanopt takes at least one step before testing the gradient
    if cost.riemannian_gradient_norm(omega0) < cfg.gradient_tolerance:
        omega, reason = omega0, "gradient norm below tolerance"
    else:
        outcome = cfg.optimizer().run(cost.problem(), initial_point=omega0, **cfg.run_arguments())
        omega, reason = np.asarray(outcome.point, dtype=np.complex128), str(outcome.stopping_criterion)
        if cost.cost(omega) > 1.0:
            omega = omega0

    trace = _trace(cost, omega, verbose)
    converged = trace[-1].grad_norm < cfg.gradient_tolerance
    phases = start if np.array_equal(omega, omega0) else PhaseVector.from_omega(omega)
    result = ManifoldResult(
        phases=phases,
        objective=objective(phases.omega),
        initial_objective=cost.scale,
        trace=trace,
        converged=converged,
        stop_reason=reason,
    )
    if not converged and verbose:
        print(f"[manifold] WARN method={cfg.method} stopped: {reason} after {result.iterations} iterations")
    return result


def write_trace_csv(trace: List[TraceRow], path: Path, header_comment: str | None = None) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        if header_comment:
            handle.write(f"# {header_comment}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["iteration", "objective", "grad_norm"])
        for row in trace:
            writer.writerow([row.iteration, f"{row.objective:.10g}", f"{row.grad_norm:.10g}"])
    return path
