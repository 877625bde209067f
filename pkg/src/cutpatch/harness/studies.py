"""Convergence, random-placement, conditioning and boundary studies.

Every study returns a list of CSV rows (dicts keyed by ``CSV_COLUMNS``) in a
fixed order. The acceptance checks are separate: :func:`check_study` runs them
on finished rows and raises :class:`StudyError` on the first failure.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..assembly.discretization import Discretization
from ..assembly.forms import Solution, System, assemble_system, solve
from ..linalg.sparse import condition_estimate
from ..norms.errors import ErrorReport, eoc, error_energy, error_L2
from ..utils.errors import ConfigError, KernelDimensionError, StudyError, handle_study_errors
from .problems import get_problem, verify_load

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    "study", "problem", "p", "n", "h", "ndof", "err_L2", "err_energy", "eoc_L2", "eoc_energy",
    "kappa", "gamma", "sample", "seed", "wall_ms", "std_L2", "rstd_L2", "mean", "error",
]
MEAN_TOL = 1e-9
EXACT_TOL = 1e-9
EOC_TOL = 0.25


@dataclass
class LevelState:
    disc: Discretization
    system: System
    solution: Solution


def _gamma_label(gamma):
    gamma = [gamma] if isinstance(gamma, (int, float)) else list(gamma)
    return ";".join(repr(float(g)) for g in gamma)


def _base_row(study, cfg, n, gamma=None, sample=""):
    return {
        "study": study, "problem": cfg.problem, "p": cfg.order, "n": n, "h": 1.0 / n,
        "gamma": _gamma_label(cfg.gamma if gamma is None else gamma), "sample": sample, "seed": cfg.seed,
    }


def _kappa(system, row):
    exclude = 1 if system.constrained else 0
    try:
        return condition_estimate(system.A, exclude)
    except KernelDimensionError as e:
        row["error"] = f"{type(e).__name__}: {e}"
        logger.warning("condition estimate failed: %s", e)
        return math.inf


def solve_level(problem, surface, n, cfg, row, gamma=None, kappa=False):
    """Discretize, solve and measure one configuration; failures land in ``row['error']``.

    Returns:
        LevelState or None when the level failed
    """
    state = None
    with handle_study_errors(row):
        start = time.perf_counter()
        disc = Discretization(surface, n, cfg.order, cfg.form_params(gamma), problem.boundary_spec(surface))
        system = assemble_system(disc, problem.load)
        sol = solve(system)
        row["ndof"] = disc.n_dofs
        row["err_L2"] = error_L2(disc, sol.u, problem.value)
        row["err_energy"] = error_energy(disc, system, sol.u, problem.value, problem.gradient)
        if system.constrained:
            row["mean"] = sol.mean
        if kappa:
            row["kappa"] = _kappa(system, row)
        if cfg.timing:
            row["wall_ms"] = round(1000 * (time.perf_counter() - start), 1)
        state = LevelState(disc, system, sol)
        logger.info("%s n=%d: L2 %.3e energy %.3e", problem.name, n, row["err_L2"], row["err_energy"])
    return state


def _ok(row):
    return "error" not in row and row.get("err_L2") is not None


def add_eoc(rows):
    """Fill eoc_L2/eoc_energy on each row from its coarser predecessor."""
    for prev, cur in zip(rows[:-1], rows[1:]):
        if not (_ok(prev) and _ok(cur)):
            continue
        reports = [ErrorReport(r["n"], r["p"], r["h"], r["ndof"], r["err_L2"], r["err_energy"]) for r in (prev, cur)]
        cur["eoc_L2"] = eoc(reports, "err_L2")[0]
        cur["eoc_energy"] = eoc(reports, "err_energy")[0]
    return rows


def _require(condition, message):
    if not condition:
        raise StudyError(message)


def _require_solved(rows):
    failed = [r for r in rows if "error" in r]
    _require(not failed, f"{len(failed)} configuration(s) failed, first: {failed[0]['error'] if failed else ''}")


def _check_levels(rows, problem, p, eoc_tol=EOC_TOL):
    _require_solved(rows)
    for r in rows:
        if "mean" in r:
            _require(abs(r["mean"]) < MEAN_TOL, f"n={r['n']}: mean value {r['mean']:.2e} not zero")
    if problem.exact_in_space:
        worst = max(max(r["err_L2"], r["err_energy"]) for r in rows)
        _require(worst < EXACT_TOL, f"polynomial solution not reproduced: error {worst:.2e}")
        return
    last = rows[-1]
    _require(len(rows) >= 2, "need at least two mesh levels for rates")
    _require(abs(last["eoc_L2"] - (p + 1)) <= eoc_tol, f"final L2 rate {last['eoc_L2']:.2f}, expected {p + 1}")
    _require(abs(last["eoc_energy"] - p) <= eoc_tol, f"final energy rate {last['eoc_energy']:.2f}, expected {p}")


def _load_check(problem, surface, cfg):
    if problem.hessian is None and problem.reference is None:
        return
    verify_load(problem, surface, np.random.default_rng(cfg.seed))


def _refine(study, problem, surface, cfg):
    """Solve on every grid size; refinement stops at the first failed level.

    Returns:
        (rows, state): rows up to and including the failed one, finest solved level
    """
    rows, state = [], None
    for n in cfg.meshes:
        row = _base_row(study, cfg, n)
        level = solve_level(problem, surface, n, cfg, row)
        rows.append(row)
        if level is None:
            logger.warning("%s: stopping refinement after n=%d failed", study, n)
            break
        state = level
    add_eoc(rows)
    return rows, state


def run_convergence(cfg):
    """Errors and observed rates under grid refinement with the geometry fixed."""
    problem = get_problem(cfg.problem, cfg.order)
    surface = problem.surface(scale=cfg.scale)
    _load_check(problem, surface, cfg)
    rows, _ = _refine("convergence", problem, surface, cfg)
    return rows


def check_convergence(rows, cfg):
    _check_levels(rows, get_problem(cfg.problem, cfg.order), cfg.order)


def uniform_angles(rng, count):
    return rng.uniform(0.0, 2 * np.pi, count)


def _loglog_slope(h, values):
    return float(np.polyfit(np.log(h), np.log(values), 1)[0])


def _random_placements(base, cfg, rng, angle_sampler=uniform_angles):
    return [base.with_placements(list(angle_sampler(rng, len(base.patches)))) for _ in range(cfg.samples)]


def run_rotation_study(cfg, angle_sampler=uniform_angles):
    """Errors for random placements of every patch in its background grid."""
    problem = get_problem(cfg.problem, cfg.order)
    base = problem.surface(scale=cfg.scale)
    placed = _random_placements(base, cfg, np.random.default_rng(cfg.seed), angle_sampler)

    rows = []
    for n in cfg.meshes:
        level = []
        for s, surface in enumerate(placed):
            row = _base_row("rotation", cfg, n, sample=s)
            solve_level(problem, surface, n, cfg, row)
            level.append(row)
        errors = np.array([r["err_L2"] for r in level if _ok(r)])
        summary = _base_row("rotation", cfg, n, sample="std")
        if len(errors) >= 2:
            summary["err_L2"] = float(np.mean(errors))
            summary["std_L2"] = float(np.std(errors, ddof=1))
            summary["rstd_L2"] = summary["std_L2"] / summary["err_L2"] if summary["err_L2"] > 0 else 0.0
        rows.extend(level)
        rows.append(summary)
    return rows


def check_rotation(rows, cfg):
    samples = [r for r in rows if r["sample"] != "std"]
    _require_solved(samples)
    for n in cfg.meshes:
        errors = [r["err_L2"] for r in samples if r["n"] == n]
        _require(max(errors) / min(errors) < 4, f"n={n}: L2 spread {max(errors) / min(errors):.2f} >= 4")
    summaries = [r for r in rows if r["sample"] == "std"]
    if cfg.order == 1 and len(summaries) >= 2:
        slope = _loglog_slope([s["h"] for s in summaries], [s["std_L2"] for s in summaries])
        _require(abs(slope - 2) <= 0.5, f"std(L2) slope {slope:.2f}, expected 2 +- 0.5")


def _condition_level(study, problem, placed, n, cfg, gamma):
    """One row per placement plus a ``max`` row: largest kappa, mean L2 error of the solved ones."""
    level = []
    for s, surface in enumerate(placed):
        row = _base_row(study, cfg, n, gamma=gamma, sample=s)
        solve_level(problem, surface, n, cfg, row, gamma=gamma, kappa=True)
        level.append(row)
    solved = [r for r in level if _ok(r) and math.isfinite(r.get("kappa", math.inf))]
    summary = _base_row(study, cfg, n, gamma=gamma, sample="max")
    if solved:
        summary["kappa"] = max(r["kappa"] for r in solved)
        summary["err_L2"] = float(np.mean([r["err_L2"] for r in solved]))
    return level + [summary]


def run_condition_study(cfg):
    """Condition numbers under refinement (stabilized and gamma = 0) and a gamma sweep.

    Every grid size gets ``cfg.samples`` random placements of its own, shared by
    all gamma values on that grid, so each level sees its own worst cuts.
    """
    problem = get_problem(cfg.problem, cfg.order)
    base = problem.surface(scale=cfg.scale)
    rng = np.random.default_rng(cfg.seed)
    placed = {n: _random_placements(base, cfg, rng) for n in cfg.meshes}

    rows = []
    for gamma in (cfg.gamma, [0.0]):
        for n in cfg.meshes:
            rows.extend(_condition_level("condition", problem, placed[n], n, cfg, gamma))
    n_sweep = cfg.meshes[min(1, len(cfg.meshes) - 1)]
    for g in cfg.gammas:
        rows.extend(_condition_level("gamma_sweep", problem, placed[n_sweep], n_sweep, cfg, [g]))
    return rows


def check_conditioning(rows, cfg):
    stab_label, zero_label = _gamma_label(cfg.gamma), _gamma_label([0.0])
    condition = [r for r in rows if r["study"] == "condition"]
    stab = [r for r in condition if r["gamma"] == stab_label and r["sample"] != "max"]
    zero = [r for r in condition if r["gamma"] == zero_label and r["sample"] != "max"]
    _require(stab and zero, "condition rows for both the stabilized and the gamma = 0 system are needed")
    _require_solved(stab)
    _require_solved(zero)
    infinite = [r for r in stab + zero if not math.isfinite(r.get("kappa", math.inf))]
    _require(not infinite, f"{len(infinite)} condition number(s) missing or infinite")

    peaks = [r for r in condition if r["gamma"] == stab_label and r["sample"] == "max"]
    if len(peaks) >= 3:
        slope = _loglog_slope([r["h"] for r in peaks], [r["kappa"] for r in peaks])
        _require(-2.4 <= slope <= -1.6, f"kappa slope {slope:.2f} outside [-2.4, -1.6]")
    stab_kappa = {(r["n"], r["sample"]): r["kappa"] for r in stab}
    ratios = [r["kappa"] / stab_kappa[(r["n"], r["sample"])] for r in zero if (r["n"], r["sample"]) in stab_kappa]
    _require(any(q >= 10 for q in ratios), f"gamma = 0 does not raise kappa tenfold (largest ratio {max(ratios, default=0):.2f})")

    by_gamma = {float(r["gamma"]): r for r in rows
                if r["study"] == "gamma_sweep" and r["sample"] == "max" and "kappa" in r}
    window = [g for g in sorted(by_gamma) if 1e-4 <= g <= 1.0]
    if 1e-2 in by_gamma and window:
        best = min(by_gamma[g]["err_L2"] for g in window)
        _require(by_gamma[1e-2]["err_L2"] <= 2 * best, "L2 error at gamma = 1e-2 not within 2x of the sweep minimum")
    rising = [by_gamma[g]["kappa"] for g in sorted(by_gamma) if 1e-6 <= g <= 1e-2]
    _require(all(b <= a * (1 + 1e-6) for a, b in zip(rising[:-1], rising[1:])),
             "kappa increases while gamma grows to 1e-2")


def run_boundary_example(cfg):
    """Problems with Dirichlet/Neumann edges, solved without the mean-value constraint.

    Returns:
        (rows, state): the CSV rows and the finest successful level for the solution dump
    """
    problem = get_problem(cfg.problem, cfg.order)
    if problem.boundary is None:
        raise ConfigError(f"problem '{cfg.problem}' has no boundary; use flat, flat_mixed, flat2 or sphere_cap")
    surface = problem.surface(scale=cfg.scale)
    _load_check(problem, surface, cfg)
    return _refine("boundary", problem, surface, cfg)


def check_boundary(rows, cfg):
    _check_levels(rows, get_problem(cfg.problem, cfg.order), cfg.order, eoc_tol=0.2)


STUDY_RUNNERS = {
    "convergence": run_convergence,
    "rotation": run_rotation_study,
    "condition": run_condition_study,
}

STUDY_CHECKS = {
    "convergence": check_convergence,
    "rotation": check_rotation,
    "condition": check_conditioning,
    "boundary": check_boundary,
}


def check_study(cfg, rows):
    """Acceptance checks of ``cfg.study`` on finished rows.

    Raises:
        StudyError: on the first failed check
    """
    STUDY_CHECKS[cfg.study](rows, cfg)
    logger.info("%s: all checks passed", cfg.study)


def _format(value):
    if value is None or value == "":
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(rows, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS, restval="", extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _format(v) for k, v in row.items()})


def write_solution(state, path):
    """Dump nodal values of the discrete solution with reference and ambient coordinates."""
    disc, u = state.disc, state.solution.u
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["patch", "x1", "x2", "X", "Y", "Z", "u_h"])
        for k, patch in enumerate(disc.surface.patches):
            start, end = disc.dofmap.patch_range(k)
            nodes = disc.dofmap.node_coordinates(k, disc.h)
            X = patch.map.eval(nodes)
            for (x1, x2), (a, b, c), value in zip(nodes, X, u[start:end]):
                writer.writerow([k] + [repr(float(v)) for v in (x1, x2, a, b, c, value)])


_PLOTS = {
    "convergence": [("convergence", 7, "L2 error"), ("convergence", 8, "energy error")],
    "boundary": [("boundary", 7, "L2 error"), ("boundary", 8, "energy error")],
    "rotation": [("rotation", 16, "std of L2 error")],
    "condition": [("condition", 11, "largest condition number", "max")],
}


def write_gnuplot_script(csv_path, study, script_path):
    """Log-log plot of the study's main quantity against h."""
    lines = [
        "set datafile separator ','",
        "set logscale xy",
        "set xlabel 'h'",
        "set key left top",
        f"set title '{study}'",
    ]
    plots = []
    for name, col, title, *sample in _PLOTS[study]:
        select = f"$1==\\\"{name}\\\"" + "".join(f" && $13==\\\"{s}\\\"" for s in sample)
        plots.append(f"\"< awk -F, '{select}' {csv_path}\" using 5:{col} with linespoints title '{title}'")
    lines.append("plot " + ", \\\n     ".join(plots))
    Path(script_path).write_text("\n".join(lines) + "\n")
    return script_path
