"""Aggregated relative error metrics against same-grid and refined
reference solutions, and FE convergence studies."""

import numpy as np

from .fem import _unit_matrices, mass_matrix
from .fields import CaseConfig, sample_params
from .grid import GridHierarchy, build_hierarchy
from .multilevel import assemble_level_problem
from .smoother import OmegaStrategy
from .transfer import prolong, transfer_pair
from .vcmr import VcmrConfig, build_stack, vcmr_solve


class MetricError(ValueError):
    pass


def _form(norm: str, level):
    s, m = _unit_matrices(level.level, level.nodes_per_side)
    if norm == "L2":
        return m
    if norm == "H1":
        return (m + s).tocsr()
    raise MetricError(f"unknown norm {norm!r}")


def mean_relative_error(predictions: np.ndarray, targets: np.ndarray,
                        norm: str, level) -> float:
    """sqrt(sum ||u_i - v_i||^2 / sum ||v_i||^2): the ratio of aggregated
    squared norms, not a mean of per-sample ratios."""
    predictions = np.atleast_2d(predictions)
    targets = np.atleast_2d(targets)
    if predictions.shape != targets.shape:
        raise MetricError("prediction/target layouts differ")
    q = _form(norm, level)
    diff = predictions - targets
    num = float(np.sum(diff * (q @ diff.T).T))
    den = float(np.sum(targets * (q @ targets.T).T))
    if den <= 0.0:
        raise MetricError("zero-norm targets make the relative error undefined")
    return float(np.sqrt(max(num, 0.0) / den))


def prolong_through(v: np.ndarray, hierarchy: GridHierarchy,
                    from_level: int, to_level: int) -> np.ndarray:
    for k in range(from_level, to_level):
        v = prolong(v, transfer_pair(hierarchy[k - 1]))
    return v


def reference_solutions(cfg: CaseConfig, sample_indices, base_levels: int,
                        extra_refinements: int = 1,
                        solver: VcmrConfig | None = None, tol: float = 1e-10):
    """Solve each sample on level base_levels + extra_refinements; skip
    records propagate as None entries."""
    if extra_refinements not in (1, 2):
        raise MetricError("extra_refinements must be 1 or 2")
    solver = solver or VcmrConfig()
    ref_level = base_levels + extra_refinements
    hierarchy = build_hierarchy(ref_level)
    out = []
    for idx in sample_indices:
        y = sample_params(cfg, idx)
        prob = assemble_level_problem(cfg, y, hierarchy[ref_level - 1])
        stack = build_stack(prob.operator, hierarchy, OmegaStrategy.GERSHGORIN)
        res = vcmr_solve(prob.rhs, prob.phi, prob.operator, stack, solver, tol=tol)
        out.append(res.u if res.converged else None)
    return hierarchy, out


def reference_error(candidates: np.ndarray, refs: list, hierarchy: GridHierarchy,
                    base_levels: int, norm: str) -> float:
    """Prolongate candidates to the reference grid and aggregate there."""
    ref_level = len(hierarchy)
    kept_c, kept_r = [], []
    for cand, ref in zip(candidates, refs):
        if ref is None:
            continue
        kept_c.append(prolong_through(cand, hierarchy, base_levels, ref_level))
        kept_r.append(ref)
    if not kept_r:
        raise MetricError("no converged reference solutions")
    return mean_relative_error(np.asarray(kept_c), np.asarray(kept_r),
                               norm, hierarchy[ref_level - 1])


def per_level_errors(predicted_corrections: list, true_corrections: list,
                     norm: str, hierarchy: GridHierarchy) -> np.ndarray:
    """mean_relative_error applied levelwise; a zero-norm level yields NaN
    instead of an exception."""
    if len(predicted_corrections) != len(true_corrections):
        raise MetricError("level counts differ")
    out = np.empty(len(true_corrections))
    for k, (pred, true) in enumerate(zip(predicted_corrections, true_corrections)):
        try:
            out[k] = mean_relative_error(pred, true, norm, hierarchy[k])
        except MetricError:
            out[k] = np.nan
    return out


def convergence_study(cfg: CaseConfig, sample_index: int, num_levels: int,
                      solver: VcmrConfig | None = None, tol: float = 1e-10):
    """H1/L2 errors of the level-l solution against the level-(L+1)
    reference, for l = 1..L.  Returns rows of (level, dofs, h1, l2)."""
    solver = solver or VcmrConfig()
    ref_level = num_levels + 1
    hierarchy = build_hierarchy(ref_level)
    y = sample_params(cfg, sample_index)
    solutions = []
    for lvl in range(1, ref_level + 1):
        prob = assemble_level_problem(cfg, y, hierarchy[lvl - 1])
        stack = build_stack(prob.operator, hierarchy, OmegaStrategy.GERSHGORIN)
        res = vcmr_solve(prob.rhs, prob.phi, prob.operator, stack, solver, tol=tol)
        solutions.append(res.u if res.converged else None)
    ref = solutions[-1]
    if ref is None:
        raise MetricError("reference level did not converge")
    rows = []
    for lvl in range(1, num_levels + 1):
        u = solutions[lvl - 1]
        if u is None:
            rows.append({"level": lvl, "dofs": hierarchy[lvl - 1].interior_count,
                         "h1_error": np.nan, "l2_error": np.nan})
            continue
        up = prolong_through(u, hierarchy, lvl, ref_level)
        rows.append({
            "level": lvl,
            "dofs": hierarchy[lvl - 1].interior_count,
            "h1_error": mean_relative_error(up, ref, "H1", hierarchy[ref_level - 1]),
            "l2_error": mean_relative_error(up, ref, "L2", hierarchy[ref_level - 1]),
        })
    return rows
