"""Multigrid V-cycle with monotone restriction, plus the complementarity
verifier and an exhaustive active-set oracle for small instances."""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .fem import SparseOperator, energy_norm
from .grid import GridHierarchy
from .smoother import OmegaStrategy, SolveResult, choose_omega, pr_solve, pr_step
from .transfer import (RestrictionMode, TransferPair, galerkin_coarse, prolong,
                       restrict_monotone, restrict_weighted, transfer_pair)


class VcmrError(ValueError):
    pass


@dataclass(frozen=True)
class VcmrConfig:
    pre_smooth: int = 3
    post_smooth: int = 3
    coarse_steps: int = 400
    cycles: int = 100
    coarse_tol: float = 1e-12
    restriction_mode: RestrictionMode = RestrictionMode.EXACT_SUPPORT

    def __post_init__(self):
        if min(self.pre_smooth, self.post_smooth, self.coarse_steps, self.cycles) < 1:
            raise VcmrError("all cycle counts must be positive")


@dataclass(frozen=True)
class LevelStack:
    """Galerkin operator chain with per-level damping and transfer pairs.
    operators[k] lives on level k+1; pairs[k] maps level k+1 -> k+2."""
    operators: tuple
    omegas: tuple
    pairs: tuple

    @property
    def depth(self) -> int:
        return len(self.operators)


def build_stack(a_finest: SparseOperator, hierarchy: GridHierarchy,
                strategy: OmegaStrategy = OmegaStrategy.GERSHGORIN) -> LevelStack:
    num = a_finest.level
    if num > len(hierarchy):
        raise VcmrError("operator level exceeds hierarchy depth")
    pairs = [transfer_pair(hierarchy[k]) for k in range(num - 1)]
    ops = [None] * num
    ops[num - 1] = a_finest
    for k in range(num - 2, -1, -1):
        ops[k] = galerkin_coarse(ops[k + 1], pairs[k])
    omegas = tuple(choose_omega(op, strategy) for op in ops)
    return LevelStack(operators=tuple(ops), omegas=tuple(omegas), pairs=tuple(pairs))


def _smooth(u, a, f, phi, omega, steps):
    for _ in range(steps):
        u = pr_step(u, a, f, phi, omega)
    return u


def vcmr_cycle(u: np.ndarray, f: np.ndarray, phi: np.ndarray, level: int,
               stack: LevelStack, cfg: VcmrConfig) -> np.ndarray:
    """One V-cycle on the given level (1-based).  Output is feasible."""
    if not 1 <= level <= stack.depth:
        raise VcmrError(f"level {level} outside stack of depth {stack.depth}")
    a = stack.operators[level - 1]
    omega = stack.omegas[level - 1]
    if u.shape[0] != a.dimension:
        raise VcmrError("iterate does not match the level dimension")
    u = _smooth(u, a, f, phi, omega, cfg.pre_smooth)
    if level == 1:
        res = pr_solve(a, f, phi, omega, tol=cfg.coarse_tol,
                       max_iters=cfg.coarse_steps, u0=u)
        u = res.u
    else:
        pair = stack.pairs[level - 2]
        phi_bar = restrict_monotone(phi - u, pair, cfg.restriction_mode)
        r_bar = restrict_weighted(f - a.matrix @ u, pair)
        e_bar = vcmr_cycle(np.zeros_like(phi_bar), r_bar, phi_bar,
                           level - 1, stack, cfg)
        u = u + prolong(e_bar, pair)
        u = _smooth(u, a, f, phi, omega, cfg.post_smooth)
    if not np.all(np.isfinite(u)):
        raise VcmrError(f"non-finite iterate on level {level}")
    return u


def vcmr_solve(f: np.ndarray, phi: np.ndarray, a: SparseOperator,
               stack: LevelStack, cfg: VcmrConfig,
               tol: float = 1e-10, max_cycles: int | None = None) -> SolveResult:
    """m-fold V-cycle application from u0 = phi until the energy increment
    falls below tol."""
    level = stack.depth
    if stack.operators[level - 1] is not a:
        # allow any operator equal in shape; identity check is too strict
        if stack.operators[level - 1].dimension != a.dimension:
            raise VcmrError("finest operator does not match the stack")
    cycles = cfg.cycles if max_cycles is None else max_cycles
    u = phi.copy()
    history = []
    for m in range(1, cycles + 1):
        unew = vcmr_cycle(u, f, phi, level, stack, cfg)
        inc = energy_norm(unew - u, stack.operators[level - 1])
        history.append(inc)
        u = unew
        if inc <= tol:
            return SolveResult(u=u, iterations=m, history=history, converged=True)
    return SolveResult(u=u, iterations=cycles, history=history, converged=False)


def complementarity_residual(u: np.ndarray, a: SparseOperator, f: np.ndarray,
                             phi: np.ndarray, gap_tol: float = 1e-12):
    """(feasibility, residual, gap) violations; all three ~0 at the solution."""
    au = a.matrix @ u
    feasibility = max(0.0, float(np.max(phi - u)))
    residual = max(0.0, float(np.max(f - au)))
    slack = np.maximum(u - phi, 0.0)
    gap = float(np.max(slack * np.abs(au - f))) if len(u) else 0.0
    return feasibility, residual, gap


_ORACLE_MAX_DOFS = 20


def _try_active_set(dense: np.ndarray, f: np.ndarray, phi: np.ndarray,
                    s: np.ndarray, tol: float):
    """Candidate u for a given active set, or None if the exact
    complementarity check rejects it."""
    n = len(f)
    free = np.setdiff1d(np.arange(n), s, assume_unique=True)
    u = np.empty(n)
    u[s] = phi[s]
    if len(free):
        rhs = f[free] - dense[np.ix_(free, s)] @ phi[s]
        try:
            u[free] = np.linalg.solve(dense[np.ix_(free, free)], rhs)
        except np.linalg.LinAlgError:
            return None
        if np.any(u[free] < phi[free] - tol):
            return None
    r = dense @ u - f
    if len(s) and np.min(r[s]) < -tol:
        return None
    if len(free) and np.max(np.abs(r[free])) > tol:
        return None
    return u


def active_set_oracle(a: SparseOperator, f: np.ndarray, phi: np.ndarray,
                      tol: float = 1e-10) -> np.ndarray:
    """Return the unique point satisfying the discrete complementarity
    conditions, found by enumerating candidate active sets.  A nested
    family ordered by the unconstrained violation is tried first (search
    order only; every candidate passes the same exact check), then the
    full enumeration by increasing cardinality."""
    n = a.dimension
    if n > _ORACLE_MAX_DOFS:
        raise VcmrError(f"oracle limited to {_ORACLE_MAX_DOFS} dofs, got {n}")
    dense = a.matrix.toarray()
    try:
        # primal-dual active-set fixed point as a search heuristic
        active = np.zeros(n, dtype=bool)
        seen = set()
        for _ in range(4 * n + 4):
            key = active.tobytes()
            if key in seen:
                break
            seen.add(key)
            u = _try_active_set(dense, f, phi, np.flatnonzero(active), tol)
            if u is not None:
                return u
            free = ~active
            uu = np.empty(n)
            uu[active] = phi[active]
            if free.any():
                rhs = f[free] - dense[np.ix_(free, active)] @ phi[active]
                uu[free] = np.linalg.solve(dense[np.ix_(free, free)], rhs)
            lam = f - dense @ uu
            active = lam + (phi - uu) > 0.0
        slack = np.linalg.solve(dense, f) - phi
        order = np.argsort(slack)
        for size in range(n + 1):
            u = _try_active_set(dense, f, phi, np.sort(order[:size]), tol)
            if u is not None:
                return u
    except np.linalg.LinAlgError:
        pass
    for size in range(n + 1):
        for active in itertools.combinations(range(n), size):
            u = _try_active_set(dense, f, phi, np.array(active, dtype=int), tol)
            if u is not None:
                return u
    raise VcmrError("no feasible complementary point found (assembly bug?)")
