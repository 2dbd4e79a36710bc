"""Projected Richardson iteration and damping selection."""

import enum
from dataclasses import dataclass, field

import numpy as np

from .fem import SparseOperator, energy_norm, power_iteration, sigma_max_bound


class SmootherError(ValueError):
    pass


class OmegaStrategy(enum.Enum):
    GERSHGORIN = "gershgorin"
    POWER_ITERATION_SAFEGUARDED = "power_iteration_safeguarded"
    MANUAL = "manual"


def choose_omega(a: SparseOperator, strategy: OmegaStrategy = OmegaStrategy.GERSHGORIN,
                 manual_value: float | None = None) -> float:
    if strategy == OmegaStrategy.GERSHGORIN:
        return 1.0 / sigma_max_bound(a)
    if strategy == OmegaStrategy.POWER_ITERATION_SAFEGUARDED:
        est = power_iteration(a, steps=100)
        if est <= 0.0 or not np.isfinite(est):
            raise SmootherError("power iteration produced no usable estimate")
        return 1.0 / (1.05 * est)
    if manual_value is None or manual_value <= 0.0:
        raise SmootherError("manual strategy needs a positive omega")
    return float(manual_value)


def pr_step(u: np.ndarray, a: SparseOperator, f: np.ndarray, phi: np.ndarray,
            omega: float) -> np.ndarray:
    if u.shape != f.shape or u.shape != phi.shape or u.shape[0] != a.dimension:
        raise SmootherError("dimension mismatch in projected Richardson step")
    return np.maximum(u + omega * (f - a.matrix @ u), phi)


@dataclass
class SolveResult:
    u: np.ndarray
    iterations: int
    history: list = field(default_factory=list)
    converged: bool = True


def pr_solve(a: SparseOperator, f: np.ndarray, phi: np.ndarray, omega: float,
             tol: float = 1e-10, max_iters: int = 100_000,
             u0: np.ndarray | None = None, history_cap: int = 10_000) -> SolveResult:
    """Iterate from u0 (default: the obstacle) until the energy norm of the
    increment drops below tol.  Non-convergence is a status, not an error."""
    u = phi.copy() if u0 is None else u0.copy()
    history = []
    for k in range(1, max_iters + 1):
        unew = pr_step(u, a, f, phi, omega)
        inc = energy_norm(unew - u, a)
        if len(history) < history_cap:
            history.append(inc)
        u = unew
        if inc <= tol:
            return SolveResult(u=u, iterations=k, history=history, converged=True)
    return SolveResult(u=u, iterations=max_iters, history=history, converged=False)
