"""Acceptance gate: the binding end-to-end guarantees of the package.

Each test prints exactly one `ACCEPTANCE <name>: PASS|FAIL` line (visible
with `pytest -s` or in captured output on failure) and then asserts.

NOTE: `contraction_rate` is known to fail.  The advertised per-step factor
(1 - omega) is not what the iteration delivers: the slowest mode decays
like 1 - omega * sigma_min, which is much closer to 1.  The criterion is
kept verbatim so the gap stays visible; the certified rate is tested in
tests/test_smoother.py.
"""

import filecmp
import time

import numpy as np
import pytest

from obstacle_mg.cli import main as cli_main
from obstacle_mg.fem import energy_norm
from obstacle_mg.fields import (Case, CaseConfig, DegenerateCoefficientError,
                                sample_params)
from obstacle_mg.grid import build_hierarchy
from obstacle_mg.multilevel import (SampleSkipped, assemble_level_problem,
                                    generate_sample, reconstruct_finest)
from obstacle_mg.smoother import choose_omega, pr_solve, pr_step
from obstacle_mg.transfer import (RestrictionMode, prolong, restrict_monotone,
                                  transfer_pair)
from obstacle_mg.vcmr import (VcmrConfig, active_set_oracle, build_stack,
                              complementarity_residual, vcmr_solve)


def verdict(name, ok, detail=""):
    print(f"\nACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}"
          f"{' (' + detail + ')' if detail else ''}")
    assert ok, f"acceptance criterion {name} failed: {detail}"


def case1_instances(count, levels, seed=101):
    """Seeded case-1 problems on the finest of `levels`; degenerate
    coefficient draws are passed over so exactly `count` remain."""
    cfg = CaseConfig(case=Case.DETERMINISTIC_OBSTACLE, p=10, master_seed=seed)
    hierarchy = build_hierarchy(levels)
    out = []
    idx = 0
    while len(out) < count:
        y = sample_params(cfg, idx)
        idx += 1
        try:
            prob = assemble_level_problem(cfg, y, hierarchy.finest)
        except DegenerateCoefficientError:
            continue
        out.append(prob)
    return hierarchy, out


def test_oracle_equivalence():
    t0 = time.time()
    hierarchy, probs = case1_instances(100, levels=1)
    worst = 0.0
    for prob in probs:
        u_star = active_set_oracle(prob.operator, prob.rhs, prob.phi)
        stack = build_stack(prob.operator, hierarchy)
        res_mg = vcmr_solve(prob.rhs, prob.phi, prob.operator, stack,
                            VcmrConfig(), tol=1e-13)
        res_pr = pr_solve(prob.operator, prob.rhs, prob.phi,
                          choose_omega(prob.operator), tol=1e-13)
        worst = max(worst,
                    float(np.max(np.abs(res_mg.u - u_star))),
                    float(np.max(np.abs(res_pr.u - u_star))))
    elapsed = time.time() - t0
    ok = worst <= 1e-8 and elapsed < 120.0
    verdict("oracle_equivalence", ok,
            f"max deviation {worst:.2e}, {elapsed:.1f}s")


def test_contraction_rate():
    t0 = time.time()
    hierarchy, probs = case1_instances(20, levels=2)
    worst_excess = 0.0
    for prob in probs:
        omega = choose_omega(prob.operator)
        bound = 1.0 - omega
        ref = pr_solve(prob.operator, prob.rhs, prob.phi, omega, tol=1e-13)
        u = prob.phi.copy()
        prev = energy_norm(u - ref.u, prob.operator)
        for _ in range(100):
            u = pr_step(u, prob.operator, prob.rhs, prob.phi, omega)
            cur = energy_norm(u - ref.u, prob.operator)
            worst_excess = max(worst_excess, cur - (bound * prev + 1e-10))
            prev = cur
            if cur <= 1e-13:
                break
    elapsed = time.time() - t0
    ok = worst_excess <= 0.0 and elapsed < 60.0
    verdict("contraction_rate", ok,
            f"worst bound excess {worst_excess:.2e}, {elapsed:.1f}s")


def test_complementarity_audit_all_cases():
    configs = [
        CaseConfig(case=Case.DETERMINISTIC_OBSTACLE, p=10, master_seed=1),
        CaseConfig(case=Case.STOCHASTIC_CONSTANT_OBSTACLE, p=10, master_seed=2),
        CaseConfig(case=Case.ROUGH_SURFACE, master_seed=3),
    ]
    hierarchy = build_hierarchy(4)
    worst = 0.0
    solved = 0
    for cfg in configs:
        done = 0
        idx = 0
        while done < 2:
            y = sample_params(cfg, idx)
            idx += 1
            try:
                prob = assemble_level_problem(cfg, y, hierarchy.finest)
            except DegenerateCoefficientError:
                continue
            stack = build_stack(prob.operator, hierarchy)
            res = vcmr_solve(prob.rhs, prob.phi, prob.operator, stack,
                             VcmrConfig(), tol=1e-10)
            if not res.converged:
                continue
            viol = complementarity_residual(res.u, prob.operator, prob.rhs,
                                            prob.phi)
            worst = max(worst, max(viol))
            done += 1
            solved += 1
    ok = solved == 6 and worst <= 1e-8
    verdict("complementarity_audit", ok,
            f"{solved} converged solves, worst violation {worst:.2e}")


def test_monotone_restriction_safety():
    pair = transfer_pair(build_hierarchy(2)[0])
    rng = np.random.default_rng(7)
    violations = 0
    for mode in RestrictionMode:
        for _ in range(1000):
            phi = rng.normal(scale=rng.uniform(0.1, 3.0),
                             size=pair.fine.interior_count)
            u = phi + np.abs(rng.normal(size=phi.shape))
            e = restrict_monotone(phi - u, pair, mode) \
                + np.abs(rng.normal(size=pair.coarse.interior_count))
            if not np.all(u + prolong(e, pair) >= phi - 1e-12):
                violations += 1
    verdict("monotone_restriction_safety", violations == 0,
            f"{violations} violations in 2000 triples")


def test_telescoping_reconstruction():
    cfg = CaseConfig(case=Case.DETERMINISTIC_OBSTACLE, p=10, master_seed=21)
    hierarchy = build_hierarchy(4)
    worst = 0.0
    done = 0
    idx = 0
    while done < 50:
        try:
            s = generate_sample(cfg, idx, hierarchy, VcmrConfig(), tol=1e-10)
        except (SampleSkipped, DegenerateCoefficientError):
            idx += 1
            continue
        idx += 1
        rec = reconstruct_finest(s.corrections, hierarchy)
        worst = max(worst, float(np.max(np.abs(rec - s.solutions[-1]))))
        done += 1
    verdict("telescoping_reconstruction", worst <= 1e-12,
            f"50 samples, worst deviation {worst:.2e}")


def test_multigrid_speedup():
    hierarchy, probs = case1_instances(10, levels=4, seed=31)
    ok = True
    ratios = []
    for prob in probs:
        stack = build_stack(prob.operator, hierarchy)
        res_mg = vcmr_solve(prob.rhs, prob.phi, prob.operator, stack,
                            VcmrConfig(cycles=2000), tol=1e-8)
        res_pr = pr_solve(prob.operator, prob.rhs, prob.phi,
                          choose_omega(prob.operator), tol=1e-8,
                          max_iters=2_000_000)
        ok &= res_mg.converged and res_pr.converged
        ok &= res_mg.iterations * 10 <= res_pr.iterations
        ratios.append(res_pr.iterations / res_mg.iterations)
    verdict("multigrid_speedup", ok,
            f"min iteration ratio {min(ratios):.1f}x")


def test_fe_convergence_ratios(tmp_path):
    t0 = time.time()
    out = tmp_path / "conv"
    rc = cli_main(["convergence", "--case", "1", "--levels", "5", "--p", "10",
                   "--seed", "41", "--sample-index", "0", "--tol", "1e-10",
                   "--cycles", "2000", "--out", str(out)])
    rows = (out / "convergence.csv").read_text().strip().splitlines()[1:]
    h1 = {int(r.split(",")[0]): float(r.split(",")[2]) for r in rows}
    ratios = [h1[m] / h1[m + 1] for m in (3, 4)]
    elapsed = time.time() - t0
    ok = rc == 0 and all(1.6 <= r <= 2.4 for r in ratios) and elapsed < 600.0
    verdict("fe_convergence", ok,
            f"H1 ratios {[f'{r:.2f}' for r in ratios]}, {elapsed:.0f}s")


def test_dataset_thread_determinism(tmp_path):
    dirs = []
    for threads, name in ((1, "a"), (8, "b")):
        out = tmp_path / name
        rc = cli_main(["dataset", "--case", "1", "--levels", "3", "--p", "10",
                       "--seed", "51", "--train", "4", "--validation", "2",
                       "--test", "2", "--tol", "1e-10",
                       "--threads", str(threads), "--out", str(out)])
        assert rc == 0
        dirs.append(out)
    a, b = dirs
    names = sorted(p.name for p in a.iterdir() if p.suffix == ".f64")
    names.append("manifest.json")
    match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    ok = mismatch == [] and errors == [] and set(match) == set(names)
    verdict("dataset_thread_determinism", ok,
            f"{len(names)} files byte-compared")
