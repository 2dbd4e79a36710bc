"""Command-line entry point: solve, dataset, metrics, convergence, smoke.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
>= 3 when smoke suites fail (2 + number of failed suites, capped).
"""

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import metrics as mx
from . import plotting
from .fields import (Case, CaseConfig, DegenerateCoefficientError, FieldError,
                     eval_coefficient, sample_params)
from .fem import energy_norm
from .grid import build_hierarchy, interior_mask
from .multilevel import (SampleSkipped, assemble_level_problem, corrections,
                         estimate_normalization, generate_sample,
                         reconstruct_finest)
from .smoother import OmegaStrategy, pr_solve
from .transfer import RestrictionMode, prolong, restrict_monotone, transfer_pair
from .vcmr import (VcmrConfig, active_set_oracle, build_stack,
                   complementarity_residual, vcmr_solve)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


class ConfigError(ValueError):
    pass


def _restriction(s: str) -> RestrictionMode:
    return RestrictionMode.EXACT_SUPPORT if s == "exact" else RestrictionMode.THREE_BY_THREE


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=str, default=None, help="JSON config file")
    p.add_argument("--case", type=int, choices=(1, 2, 3), default=1)
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--p", type=int, default=10, help="parameter dimension")
    p.add_argument("--wave-cutoff", type=float, default=26.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", type=str, default="out")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--cycles", type=int, default=100)
    p.add_argument("--pre-smooth", type=int, default=3)
    p.add_argument("--post-smooth", type=int, default=3)
    p.add_argument("--coarse-steps", type=int, default=400)
    p.add_argument("--restriction", choices=("exact", "3x3"), default="exact")
    p.add_argument("--ref-refine", type=int, choices=(1, 2), default=1)
    p.add_argument("--sample-index", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="obstacle-mg",
                                     description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one sample and report it")
    _add_common(p_solve)
    p_solve.add_argument("--phi-const", type=float, default=None,
                         help="override the obstacle with a constant")
    p_solve.add_argument("--contact-tol", type=float, default=1e-8)

    p_data = sub.add_parser("dataset", help="generate a multilevel dataset")
    _add_common(p_data)
    p_data.add_argument("--train", type=int, default=8)
    p_data.add_argument("--validation", type=int, default=4)
    p_data.add_argument("--test", type=int, default=4)

    p_met = sub.add_parser("metrics", help="score predictions against a dataset")
    p_met.add_argument("predictions_dir", type=str)
    p_met.add_argument("dataset_dir", type=str)
    p_met.add_argument("--split", type=str, default="test")
    p_met.add_argument("--out", type=str, default="out")
    p_met.add_argument("--ref-refine", type=int, choices=(1, 2), default=1)
    p_met.add_argument("--tol", type=float, default=1e-10)
    p_met.add_argument("--skip-reference", action="store_true",
                       help="omit the refined-grid reference metrics")

    p_conv = sub.add_parser("convergence", help="per-level FE convergence table")
    _add_common(p_conv)

    p_smoke = sub.add_parser("smoke", help="run the invariant smoke suites")
    _add_common(p_smoke)
    return parser


def _load_config_overrides(args):
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg = json.load(fh)
        for key, val in cfg.items():
            attr = key.replace("-", "_")
            if not hasattr(args, attr):
                raise ConfigError(f"unknown config key {key!r}")
            if parser_default(attr) == getattr(args, attr):
                setattr(args, attr, val)
    return args


_PARSER_FOR_DEFAULTS = None


def parser_default(attr):
    global _PARSER_FOR_DEFAULTS
    if _PARSER_FOR_DEFAULTS is None:
        _PARSER_FOR_DEFAULTS = build_parser()
    for action in _PARSER_FOR_DEFAULTS._subparsers._group_actions[0].choices.values():
        for a in action._actions:
            if a.dest == attr:
                return a.default
    return None


def _threads(args) -> int:
    if getattr(args, "threads", None):
        return max(1, args.threads)
    env = os.environ.get("OBSTACLE_MG_THREADS")
    return max(1, int(env)) if env else 1


def _case_config(args) -> CaseConfig:
    return CaseConfig(case=Case(args.case), p=args.p,
                      wave_cutoff=args.wave_cutoff, master_seed=args.seed)


def _solver_config(args) -> VcmrConfig:
    return VcmrConfig(pre_smooth=args.pre_smooth, post_smooth=args.post_smooth,
                      coarse_steps=args.coarse_steps, cycles=args.cycles,
                      restriction_mode=_restriction(args.restriction))


def _echo_config(args, outdir: Path):
    outdir.mkdir(parents=True, exist_ok=True)
    resolved = {k: (v.name if hasattr(v, "name") and not isinstance(v, str) else v)
                for k, v in vars(args).items() if k != "config"}
    with open(outdir / "resolved_config.json", "w") as fh:
        json.dump(resolved, fh, indent=2, sort_keys=True, default=str)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def cmd_solve(args) -> int:
    outdir = Path(args.out)
    _echo_config(args, outdir)
    cfg = _case_config(args)
    hierarchy = build_hierarchy(args.levels)
    level = hierarchy.finest
    y = sample_params(cfg, args.sample_index)
    prob = assemble_level_problem(cfg, y, level)
    phi = prob.phi if args.phi_const is None else np.full_like(prob.phi, args.phi_const)
    stack = build_stack(prob.operator, hierarchy)
    t0 = time.perf_counter()
    res = vcmr_solve(prob.rhs, phi, prob.operator, stack, _solver_config(args),
                     tol=args.tol)
    elapsed = time.perf_counter() - t0
    feas, resid, gap = complementarity_residual(res.u, prob.operator, prob.rhs, phi)
    n = level.nodes_per_side
    full = ds.embed_full(res.u, level)
    contact_full = np.zeros(level.node_count)
    contact_full[interior_mask(level)] = (res.u - phi <= args.contact_tol).astype(float)

    _write_csv(outdir / "solution.csv", ["row", "col", "x1", "x2", "u"],
               [(i, j, j / (n - 1), i / (n - 1), full[i * n + j])
                for i in range(n) for j in range(n)])
    _write_csv(outdir / "contact.csv", ["row", "col", "contact"],
               [(i, j, int(contact_full[i * n + j]))
                for i in range(n) for j in range(n)])
    audit = {"converged": res.converged, "cycles": res.iterations,
             "feasibility_violation": feas, "residual_violation": resid,
             "complementarity_gap": gap, "seconds": elapsed}
    with open(outdir / "audit.json", "w") as fh:
        json.dump(audit, fh, indent=2)
    plotting.render_field(prob.kappa, n, outdir / "kappa.png", "coefficient")
    plotting.render_field(full, n, outdir / "solution.png", "solution")
    plotting.render_contact(contact_full, n, outdir / "contact.png")
    print(f"solve: cycles={res.iterations} converged={res.converged} "
          f"feas={feas:.2e} resid={resid:.2e} gap={gap:.2e} time={elapsed:.2f}s")
    return EXIT_OK if res.converged else EXIT_NUMERICAL


def cmd_dataset(args) -> int:
    outdir = Path(args.out)
    _echo_config(args, outdir)
    cfg = _case_config(args)
    hierarchy = build_hierarchy(args.levels)
    solver = _solver_config(args)
    counts = {"train": args.train, "validation": args.validation, "test": args.test}
    ranges = ds.split_index_ranges(counts)
    total = sum(counts.values())

    # Draws whose coefficient field is not positive everywhere lie outside the
    # admissible parameter domain; pass over them deterministically so that the
    # dataset always contains the requested number of admissible samples.  Only
    # finest-level positivity needs checking (coarse nodes are a subset).
    indices = []
    idx = 0
    rejected = 0
    limit = 100 * max(total, 1) + 1000
    while len(indices) < total:
        if idx >= limit:
            print(f"dataset aborted: {rejected} non-positive coefficient draws "
                  f"in the first {idx} indices", file=sys.stderr)
            return EXIT_NUMERICAL
        try:
            eval_coefficient(cfg, sample_params(cfg, idx), hierarchy.finest)
            indices.append(idx)
        except DegenerateCoefficientError:
            rejected += 1
        idx += 1
    if rejected:
        print(f"dataset: passed over {rejected} non-positive coefficient draws",
              file=sys.stderr)

    def work(i):
        try:
            return generate_sample(cfg, i, hierarchy, solver, tol=args.tol)
        except SampleSkipped as exc:
            return ("skip", i, str(exc))

    nthreads = _threads(args)
    if nthreads == 1:
        results = [work(i) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            results = list(pool.map(work, indices))

    skips = [r for r in results if isinstance(r, tuple)]
    if total and len(skips) / total > 0.01:
        for _, idx, msg in skips:
            print(f"skip sample {idx}: {msg}", file=sys.stderr)
        print(f"dataset aborted: {len(skips)}/{total} samples skipped",
              file=sys.stderr)
        return EXIT_NUMERICAL
    by_split = {}
    actual = {}
    for split in ds.SPLITS:
        lo, hi = ranges[split]
        kept = [results[i] for i in range(lo, hi) if not isinstance(results[i], tuple)]
        by_split[split] = kept
        actual[split] = len(kept)
    all_samples = by_split["train"] + by_split["validation"] + by_split["test"]
    if not all_samples:
        print("dataset: no samples generated", file=sys.stderr)
        return EXIT_NUMERICAL
    norm_basis = by_split["train"] or all_samples
    b = estimate_normalization(norm_basis, hierarchy)
    manifest = ds.export_dataset(by_split, b, hierarchy, cfg.to_json(), actual, outdir)
    derived_p = cfg.param_dim
    print(f"dataset: {actual} samples, L={args.levels}, parameter dimension {derived_p}")
    for k, bl in enumerate(b, start=1):
        print(f"  level {k}: b={bl:.6e}, grid {manifest.grid_sizes[k-1]}")
    return EXIT_OK


def _load_predictions(pred_dir: Path, split: str, levels: int):
    meta_path = pred_dir / "predictions.json"
    meta = None
    if meta_path.exists():
        with open(meta_path) as fh:
            meta = json.load(fh)
    per_level = {}
    for lvl in range(1, levels + 1):
        f = pred_dir / f"prediction_L{lvl}_{split}.f64"
        if f.exists():
            per_level[lvl] = np.fromfile(f, dtype="<f8")
    combined = None
    f = pred_dir / f"prediction_solution_L{levels}_{split}.f64"
    if f.exists():
        combined = np.fromfile(f, dtype="<f8")
    return meta, per_level, combined


def cmd_metrics(args) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    data = ds.import_dataset(args.dataset_dir)
    levels = data.manifest.levels
    hierarchy = build_hierarchy(levels)
    split = args.split
    count = data.manifest.counts[split]
    n = hierarchy.finest.nodes_per_side
    sols = data.array("solution", levels, split).reshape(count, n * n)
    mask = interior_mask(hierarchy.finest)
    targets = sols[:, mask]

    pred_dir = Path(args.predictions_dir)
    meta, per_level, combined = _load_predictions(pred_dir, split, levels)
    b = data.normalization
    if combined is None:
        if len(per_level) != levels:
            print("metrics: predictions missing combined solution and "
                  "per-level arrays", file=sys.stderr)
            return EXIT_CONFIG
        acc = None
        for lvl in range(1, levels + 1):
            g = hierarchy[lvl - 1]
            arr = per_level[lvl].reshape(count, g.node_count)[:, interior_mask(g)] * b[lvl - 1]
            acc = arr if acc is None else np.asarray(
                [prolong(a, transfer_pair(hierarchy[lvl - 2])) for a in acc]) + arr
        preds = acc
    else:
        preds = combined.reshape(count, n * n)[:, mask]
    if preds.shape != targets.shape:
        print(f"metrics: layout mismatch {preds.shape} vs {targets.shape}",
              file=sys.stderr)
        return EXIT_CONFIG

    report = {"split": split, "count": count, "levels": levels,
              "case": data.manifest.case}
    for norm in ("H1", "L2"):
        report[f"e_mr_{norm.lower()}"] = mx.mean_relative_error(
            preds, targets, norm, hierarchy.finest)
    if not args.skip_reference:
        cfg = CaseConfig.from_json(data.manifest.case)
        sample_indices = data.manifest.sample_indices.get(split)
        if sample_indices is None:
            lo, hi = ds.split_index_ranges(data.manifest.counts)[split]
            sample_indices = range(lo, hi)
        ref_h, refs = mx.reference_solutions(cfg, sample_indices, levels,
                                             args.ref_refine, tol=args.tol)
        for norm in ("H1", "L2"):
            report[f"e_mr_{norm.lower()}_ref"] = mx.reference_error(
                preds, refs, ref_h, levels, norm)
    pl_h1 = pl_l2 = None
    if len(per_level) == levels:
        pred_corr, true_corr = [], []
        for lvl in range(1, levels + 1):
            g = hierarchy[lvl - 1]
            m = interior_mask(g)
            pred_corr.append(per_level[lvl].reshape(count, g.node_count)[:, m])
            true_corr.append(data.array("correction", lvl, split)
                             .reshape(count, g.node_count)[:, m])
        pl_h1 = mx.per_level_errors(pred_corr, true_corr, "H1", hierarchy)
        pl_l2 = mx.per_level_errors(pred_corr, true_corr, "L2", hierarchy)
        report["per_level_h1"] = [float(x) for x in pl_h1]
        report["per_level_l2"] = [float(x) for x in pl_l2]
        _write_csv(outdir / "per_level_errors.csv",
                   ["level", "e_mr_h1", "e_mr_l2"],
                   [(k + 1, pl_h1[k], pl_l2[k]) for k in range(levels)])
        plotting.render_per_level(pl_h1, pl_l2, outdir / "per_level_errors.png")
    with open(outdir / "report.json", "w") as fh:
        json.dump(report, fh, indent=2)
    header = ["problem", "p", "e_mr_h1", "e_mr_h1_ref", "e_mr_l2", "e_mr_l2_ref"]
    row = [data.manifest.case.get("case"), data.manifest.case.get("p"),
           report.get("e_mr_h1"), report.get("e_mr_h1_ref"),
           report.get("e_mr_l2"), report.get("e_mr_l2_ref")]
    _write_csv(outdir / "report.csv", header, [row])
    print(json.dumps({k: v for k, v in report.items()
                      if not k.startswith("per_level")}, indent=2))
    return EXIT_OK


def cmd_convergence(args) -> int:
    outdir = Path(args.out)
    _echo_config(args, outdir)
    cfg = _case_config(args)
    rows = mx.convergence_study(cfg, args.sample_index, args.levels,
                                _solver_config(args), tol=args.tol)
    _write_csv(outdir / "convergence.csv", ["level", "dofs", "h1_error", "l2_error"],
               [(r["level"], r["dofs"], r["h1_error"], r["l2_error"]) for r in rows])
    plotting.render_convergence(rows, outdir / "convergence.png")
    for r in rows:
        print(f"level {r['level']}: dofs={r['dofs']} "
              f"H1={r['h1_error']:.4e} L2={r['l2_error']:.4e}")
    if any(np.isnan(r["h1_error"]) for r in rows):
        return EXIT_NUMERICAL
    return EXIT_OK


def _smoke_suites(args):
    rng = np.random.default_rng(args.seed)
    hierarchy = build_hierarchy(2)
    cfg1 = CaseConfig(case=Case.DETERMINISTIC_OBSTACLE, p=5, master_seed=args.seed)
    fault = os.environ.get("OBSTACLE_MG_FAULT", "")

    def suite_oracle():
        level = hierarchy[0]
        prob = assemble_level_problem(cfg1, sample_params(cfg1, 0), level)
        f = prob.rhs * rng.uniform(-2.0, 1.0, prob.rhs.shape)
        phi = rng.uniform(-0.02, 0.01, prob.phi.shape)
        stack = build_stack(prob.operator, hierarchy)
        res = vcmr_solve(f, phi, prob.operator, stack, VcmrConfig(), tol=1e-12)
        u_oracle = active_set_oracle(prob.operator, f, phi)
        return np.max(np.abs(res.u - u_oracle)) <= 1e-8

    def suite_contraction():
        prob = assemble_level_problem(cfg1, sample_params(cfg1, 1), hierarchy[1])
        stack = build_stack(prob.operator, hierarchy)
        omega = stack.omegas[-1]
        ref = vcmr_solve(prob.rhs, prob.phi, prob.operator, stack, VcmrConfig(),
                         tol=1e-13)
        u = prob.phi.copy()
        from .smoother import pr_step
        prev = energy_norm(u - ref.u, prob.operator)
        for _ in range(50):
            u = pr_step(u, prob.operator, prob.rhs, prob.phi, omega)
            cur = energy_norm(u - ref.u, prob.operator)
            if cur > prev + 1e-12:
                return False
            prev = cur
        return True

    def suite_safety():
        pair = transfer_pair(hierarchy[0])
        ok = True
        for _ in range(200):
            # feasible iterates, as the projection step guarantees
            phi = rng.normal(size=pair.fine.interior_count)
            u = phi + np.abs(rng.normal(size=phi.shape))
            for mode in RestrictionMode:
                if fault == "restriction_min":
                    # the unsafe choice: min instead of max
                    e_bar = -restrict_monotone(u - phi, pair, mode)
                else:
                    e_bar = restrict_monotone(phi - u, pair, mode)
                lifted = u + prolong(e_bar, pair)
                ok &= bool(np.all(lifted >= phi - 1e-12))
        return ok

    def suite_telescoping():
        sample = generate_sample(cfg1, 2, hierarchy, VcmrConfig(), tol=1e-11)
        rec = reconstruct_finest(sample.corrections, hierarchy)
        return np.max(np.abs(rec - sample.solutions[-1])) <= 1e-12

    def suite_adjoint():
        pair = transfer_pair(hierarchy[0])
        from .transfer import restrict_weighted
        ok = True
        for _ in range(100):
            v = rng.normal(size=pair.coarse.interior_count)
            r = rng.normal(size=pair.fine.interior_count)
            lhs = float(prolong(v, pair) @ r)
            rhs = float(v @ restrict_weighted(r, pair))
            ok &= abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))
        return ok

    return {"oracle_agreement": suite_oracle, "contraction": suite_contraction,
            "safety": suite_safety, "telescoping": suite_telescoping,
            "adjoint": suite_adjoint}


def cmd_smoke(args) -> int:
    outdir = Path(args.out)
    _echo_config(args, outdir)
    failed = 0
    for name, fn in _smoke_suites(args).items():
        try:
            ok = fn()
        except Exception as exc:  # a crashing suite counts as failed
            print(f"smoke {name}: ERROR {exc}")
            ok = False
        print(f"smoke {name}: {'pass' if ok else 'FAIL'}")
        failed += 0 if ok else 1
    if failed:
        return min(2 + failed, 120)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _load_config_overrides(args)
        if getattr(args, "levels", 1) < 1:
            raise ConfigError("levels must be >= 1")
    except (ConfigError, FieldError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    handlers = {"solve": cmd_solve, "dataset": cmd_dataset, "metrics": cmd_metrics,
                "convergence": cmd_convergence, "smoke": cmd_smoke}
    try:
        return handlers[args.command](args)
    except (ConfigError, FieldError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
