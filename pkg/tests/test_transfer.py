import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from obstacle_mg.fem import sigma_max_bound
from obstacle_mg.grid import build_level, interior_mask
from obstacle_mg.transfer import (RestrictionMode, TransferError,
                                  galerkin_coarse, prolong,
                                  prolongation_full, restrict_monotone,
                                  restrict_weighted, transfer_pair)

from conftest import unit_operator


@pytest.fixture(scope="module")
def pair12():
    return transfer_pair(build_level(1))


@pytest.fixture(scope="module")
def pair23():
    return transfer_pair(build_level(2))


def test_pair_shapes(pair12):
    assert pair12.coarse.nodes_per_side == 6
    assert pair12.fine.nodes_per_side == 11
    assert pair12.prolongation.shape == (81, 16)


def test_full_prolongation_preserves_constants():
    coarse, fine = build_level(1), build_level(2)
    p = prolongation_full(coarse, fine)
    out = p @ np.ones(coarse.node_count)
    assert np.allclose(out, 1.0, atol=1e-15)


def test_nonconsecutive_levels_rejected():
    with pytest.raises(TransferError):
        prolongation_full(build_level(1), build_level(3))


def test_coarse_hat_image(pair23):
    """A coarse unit hat maps to 1 at the coincident fine node and 1/2 at
    its six edge neighbors along the mesh edges (E, W, N, S, NE, SW)."""
    coarse, fine = pair23.coarse, pair23.fine
    mc = coarse.nodes_per_side - 2
    mf = fine.nodes_per_side - 2
    ci, cj = mc // 2, mc // 2          # interior (row, col), grid (ci+1, cj+1)
    v = np.zeros(coarse.interior_count)
    v[ci * mc + cj] = 1.0
    out = prolong(v, pair23).reshape(mf, mf)
    fi, fj = 2 * (ci + 1) - 1, 2 * (cj + 1) - 1  # interior indices on the fine grid
    expected = np.zeros((mf, mf))
    expected[fi, fj] = 1.0
    for di, dj in ((0, 1), (0, -1), (1, 0), (-1, 0), (1, 1), (-1, -1)):
        expected[fi + di, fj + dj] = 0.5
    assert np.array_equal(out, expected)
    # anti-diagonal neighbors receive nothing
    assert out[fi + 1, fj - 1] == 0.0
    assert out[fi - 1, fj + 1] == 0.0


def test_adjoint_identity(pair12):
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(100):
        v = rng.normal(size=pair12.coarse.interior_count)
        r = rng.normal(size=pair12.fine.interior_count)
        lhs = float(prolong(v, pair12) @ r)
        rhs = float(v @ restrict_weighted(r, pair12))
        worst = max(worst, abs(lhs - rhs))
    assert worst <= 1e-12


def test_weighted_restriction_of_diagonal_midpoint(pair12):
    """A fine unit at a diagonal-edge midpoint restricts to 1/2 at each of
    the two diagonal endpoints."""
    fine, coarse = pair12.fine, pair12.coarse
    mf = fine.nodes_per_side - 2
    mc = coarse.nodes_per_side - 2
    # fine grid node (3, 3) is the midpoint of the coarse diagonal
    # (1,1)-(2,2); interior indices are one less
    r = np.zeros(pair12.fine.interior_count)
    r[(3 - 1) * mf + (3 - 1)] = 1.0
    out = restrict_weighted(r, pair12).reshape(mc, mc)
    expected = np.zeros((mc, mc))
    expected[0, 0] = 0.5   # coarse grid (1, 1)
    expected[1, 1] = 0.5   # coarse grid (2, 2)
    assert np.array_equal(out, expected)


def test_galerkin_energy_identity_and_symmetry(pair12):
    a = unit_operator(pair12.fine)
    c = galerkin_coarse(a, pair12)
    assert c.level == pair12.coarse.level
    assert (c.matrix != c.matrix.T).nnz == 0
    rng = np.random.default_rng(1)
    for _ in range(20):
        v = rng.normal(size=pair12.coarse.interior_count)
        lhs = float(v @ (c.matrix @ v))
        pv = prolong(v, pair12)
        rhs = float(pv @ (a.matrix @ pv))
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))
    # positive definite with a finite damping bound
    sig = np.linalg.eigvalsh(c.matrix.toarray())
    assert sig[0] > 0
    assert np.isfinite(sigma_max_bound(c))


def test_monotone_restriction_spike_containment(pair12):
    """exact_support mode: a spike at the NE-diagonal fine neighbor of a
    coarse node lands on that coarse node."""
    fine, coarse = pair12.fine, pair12.coarse
    mf = fine.nodes_per_side - 2
    mc = coarse.nodes_per_side - 2
    w = np.full(pair12.fine.interior_count, -1.0)
    # coarse grid node (2, 2) sits at fine grid (4, 4); NE neighbor (5, 5)
    w[(5 - 1) * mf + (5 - 1)] = 3.0
    out = restrict_monotone(w, pair12, RestrictionMode.EXACT_SUPPORT)
    grid = out.reshape(mc, mc)
    assert grid[1, 1] == 3.0  # coarse grid (2, 2) -> interior (1, 1)
    # the spike is NOT in the exact support of coarse (3, 2) or (2, 3)
    assert grid[2, 1] == -1.0
    assert grid[1, 2] == -1.0


def test_three_by_three_dominates_exact(pair12):
    rng = np.random.default_rng(2)
    for _ in range(50):
        w = rng.normal(size=pair12.fine.interior_count)
        ex = restrict_monotone(w, pair12, RestrictionMode.EXACT_SUPPORT)
        full = restrict_monotone(w, pair12, RestrictionMode.THREE_BY_THREE)
        assert np.all(full >= ex)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_monotone_restriction_safety(seed):
    """On the algorithm's domain (feasible u >= phi, as produced by the
    projection step): whenever e >= R^max(phi - u), lifting preserves
    feasibility.  Feasibility of u matters: fine nodes next to the
    boundary lose prolongation weight to coarse boundary positions, so a
    positive defect obstacle there has no coarse carrier."""
    pair = transfer_pair(build_level(1))
    rng = np.random.default_rng(seed)
    phi = rng.normal(size=pair.fine.interior_count)
    u = phi + np.abs(rng.normal(size=phi.shape))
    for mode in RestrictionMode:
        base = restrict_monotone(phi - u, pair, mode)
        e = base + np.abs(rng.normal(size=base.shape))  # any e >= base
        lifted = u + prolong(e, pair)
        assert np.all(lifted >= phi - 1e-12)
        # and with e exactly at the bound too
        lifted0 = u + prolong(base, pair)
        assert np.all(lifted0 >= phi - 1e-12)


def test_safety_needs_feasible_iterates(pair12):
    """Counterexample fixing the domain of the safety guarantee: with an
    infeasible u (u < phi at a boundary-adjacent fine node), even the
    minimal admissible coarse correction cannot restore feasibility,
    because that fine node keeps only half its prolongation weight on
    interior coarse nodes."""
    u = np.zeros(pair12.fine.interior_count)
    phi = np.full(pair12.fine.interior_count, -1.0)
    phi[0] = 2.0  # fine grid (1, 1): diagonal midpoint next to the corner
    for mode in RestrictionMode:
        e = restrict_monotone(phi - u, pair12, mode)
        lifted = u + prolong(e, pair12)
        assert lifted[0] < phi[0]  # violation is unavoidable here


def test_restriction_nonpositive_when_feasible(pair12):
    """u >= phi implies R^max(phi - u) <= 0, so 0 is a feasible coarse start."""
    rng = np.random.default_rng(3)
    for _ in range(50):
        phi = rng.normal(size=pair12.fine.interior_count)
        u = phi + np.abs(rng.normal(size=phi.shape))
        for mode in RestrictionMode:
            assert np.all(restrict_monotone(phi - u, pair12, mode) <= 1e-15)


def test_length_checks(pair12):
    with pytest.raises(TransferError):
        prolong(np.zeros(7), pair12)
    with pytest.raises(TransferError):
        restrict_weighted(np.zeros(7), pair12)
    with pytest.raises(TransferError):
        restrict_monotone(np.zeros(7), pair12)
