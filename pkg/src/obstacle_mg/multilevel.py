"""Per-sample multilevel decomposition: independent solves on every level,
telescoping corrections, and normalization constants."""

from dataclasses import dataclass

import numpy as np

from .fem import assemble_operator, assemble_rhs, l2_norm
from .fields import CaseConfig, eval_coefficient, eval_forcing, eval_obstacle, sample_params
from .grid import GridHierarchy, GridLevel, interior_mask
from .smoother import OmegaStrategy
from .transfer import prolong, transfer_pair
from .vcmr import VcmrConfig, build_stack, complementarity_residual, vcmr_solve

NORMALIZATION_FLOOR = 1e-12


class SampleSkipped(RuntimeError):
    """A level failed to converge; the sample is dropped, not fatal."""


@dataclass(frozen=True)
class LevelProblem:
    level: GridLevel
    kappa: np.ndarray      # full-grid nodal field
    forcing: np.ndarray    # full-grid nodal field
    obstacle: np.ndarray   # full-grid nodal field
    operator: object
    rhs: np.ndarray        # interior dofs
    phi: np.ndarray        # interior dofs


@dataclass
class MultilevelSample:
    sample_index: int
    params: np.ndarray
    problems: list          # LevelProblem per level
    solutions: list         # interior dof vectors per level
    corrections: list       # interior dof vectors per level


def assemble_level_problem(cfg: CaseConfig, y: np.ndarray, level: GridLevel) -> LevelProblem:
    kappa = eval_coefficient(cfg, y, level)
    forcing = eval_forcing(cfg, level)
    obstacle = eval_obstacle(cfg, y, level)
    mask = interior_mask(level)
    return LevelProblem(level=level, kappa=kappa, forcing=forcing, obstacle=obstacle,
                        operator=assemble_operator(kappa, level),
                        rhs=assemble_rhs(forcing, level),
                        phi=obstacle[mask])


def solve_all_levels(cfg: CaseConfig, y: np.ndarray, hierarchy: GridHierarchy,
                     solver: VcmrConfig | None = None, tol: float = 1e-10,
                     strategy: OmegaStrategy = OmegaStrategy.GERSHGORIN,
                     audit_tol: float | None = None):
    """Solve the sample independently on each level; audit every solution."""
    solver = solver or VcmrConfig()
    audit_tol = 10.0 * tol if audit_tol is None else audit_tol
    problems, solutions = [], []
    for level in hierarchy.levels:
        prob = assemble_level_problem(cfg, y, level)
        stack = build_stack(prob.operator, hierarchy, strategy)
        res = vcmr_solve(prob.rhs, prob.phi, prob.operator, stack, solver, tol=tol)
        if not res.converged:
            raise SampleSkipped(f"level {level.level} did not converge")
        viol = complementarity_residual(res.u, prob.operator, prob.rhs, prob.phi)
        if max(viol) > audit_tol:
            raise SampleSkipped(
                f"level {level.level} failed the complementarity audit: {viol}")
        problems.append(prob)
        solutions.append(res.u)
    return problems, solutions


def corrections(solutions: list, hierarchy: GridHierarchy) -> list:
    """v_1 = u_1; v_l = u_l - P u_(l-1), each on its own level's dofs."""
    out = [solutions[0].copy()]
    for k in range(1, len(solutions)):
        pair = transfer_pair(hierarchy[k - 1])
        out.append(solutions[k] - prolong(solutions[k - 1], pair))
    return out


def reconstruct_finest(corr: list, hierarchy: GridHierarchy) -> np.ndarray:
    """Telescoping sum of prolongated corrections; equals u_L."""
    acc = corr[0].copy()
    for k in range(1, len(corr)):
        acc = prolong(acc, transfer_pair(hierarchy[k - 1])) + corr[k]
    return acc


def generate_sample(cfg: CaseConfig, sample_index: int, hierarchy: GridHierarchy,
                    solver: VcmrConfig | None = None, tol: float = 1e-10) -> MultilevelSample:
    y = sample_params(cfg, sample_index)
    problems, solutions = solve_all_levels(cfg, y, hierarchy, solver, tol)
    corr = corrections(solutions, hierarchy)
    return MultilevelSample(sample_index=sample_index, params=y, problems=problems,
                            solutions=solutions, corrections=corr)


def estimate_normalization(samples: list, hierarchy: GridHierarchy,
                           p_norm: int = 2) -> np.ndarray:
    """Monte-Carlo Bochner norm of the corrections, b_l > 0.  Only p=2 is
    implemented (root-mean-square of the L2 norms)."""
    if not samples:
        raise ValueError("normalization needs at least one sample")
    if p_norm != 2:
        raise NotImplementedError("only the p=2 Bochner norm is supported")
    num_levels = len(hierarchy)
    acc = np.zeros(num_levels)
    for s in samples:
        for k in range(num_levels):
            acc[k] += l2_norm(s.corrections[k], hierarchy[k]) ** 2
    b = np.sqrt(acc / len(samples))
    return np.maximum(b, NORMALIZATION_FLOOR)


def error_budget(b: np.ndarray, eps: np.ndarray) -> float:
    """Combined multilevel bound sum(b_l * eps_l)."""
    if b.shape != eps.shape:
        raise ValueError("weights and per-level errors differ in length")
    return float(np.sum(b * eps))
