"""Tests for study configuration, model problems and study runners."""
import csv

import numpy as np
import pytest

from cutpatch.harness import (
    CSV_COLUMNS,
    StudyConfig,
    build_config,
    check_study,
    get_problem,
    load_config_file,
    run_boundary_example,
    run_condition_study,
    run_convergence,
    run_rotation_study,
    verify_load,
    write_csv,
    write_gnuplot_script,
)
from cutpatch.assembly import solve
from cutpatch.geometry import sphere, sphere_cap
from cutpatch.harness.studies import check_boundary, check_conditioning, check_convergence
from cutpatch.utils.errors import ConfigError, SingularSystemError, StudyError, handle_study_errors


def _zero_angles(rng, count):
    return np.zeros(count)


class TestStudyConfig:
    def test_defaults(self, monkeypatch):
        monkeypatch.delenv("CUTPATCH_OUT", raising=False)
        cfg = StudyConfig().validate()
        assert cfg.meshes == [8, 16, 32, 64]
        assert cfg.out == "results.csv"
        assert cfg.form_params().beta == 100.0

    def test_default_meshes_follow_order(self):
        assert build_config({"order": 2}).meshes == [4, 8, 16, 32]

    def test_env_out(self, monkeypatch):
        monkeypatch.setenv("CUTPATCH_OUT", "env.csv")
        assert build_config().out == "env.csv"
        assert build_config({"out": "flag.csv"}).out == "flag.csv"

    @pytest.mark.parametrize("values", [
        {"meshes": [16, 8]},
        {"meshes": [1, 4]},
        {"order": 4},
        {"beta": 0.0},
        {"problem": "cube"},
        {"study": "plot"},
        {"study": "rotation", "samples": 1},
        {"study": "condition", "samples": 0},
        {"gamma": [1e-2, 1e-3]},
        {"scale": 0.9},
    ])
    def test_invalid(self, values):
        with pytest.raises(ConfigError):
            build_config(values)

    def test_gamma_per_order(self):
        cfg = build_config({"order": 2, "gamma": [1e-2, 1e-3]})
        assert cfg.form_params().gammas(2) == [1e-2, 1e-3]


class TestConfigFile:
    def test_parse(self, out_dir):
        path = out_dir / "study.cfg"
        path.write_text("# sweep settings\nproblem = torus\nmeshes = 4, 8\ncheck = yes\nseed = 1  # fixed\n")
        values = load_config_file(path)
        assert values == {"problem": "torus", "meshes": [4, 8], "check": True, "seed": 1}

    def test_float_lists(self, out_dir):
        path = out_dir / "study.cfg"
        path.write_text("gammas = 1e-3,1e-2\n")
        assert load_config_file(path)["gammas"] == [1e-3, 1e-2]

    def test_file_overrides_flags(self, out_dir):
        path = out_dir / "study.cfg"
        path.write_text("order = 2\n")
        cfg = build_config({"order": 1, "problem": "flat2"}, path)
        assert cfg.order == 2
        assert cfg.problem == "flat2"

    @pytest.mark.parametrize("text", ["colour = red\n", "meshes 4,8\n", "order = two\n"])
    def test_invalid(self, out_dir, text):
        path = out_dir / "bad.cfg"
        path.write_text(text)
        with pytest.raises(ConfigError):
            load_config_file(path)

    def test_missing_file(self, out_dir):
        with pytest.raises(ConfigError):
            load_config_file(out_dir / "missing.cfg")


class TestProblems:
    def test_unknown(self):
        with pytest.raises(ConfigError):
            get_problem("cube")

    @pytest.mark.parametrize("name", ["sphere", "torus", "sphere_cap"])
    def test_loads_match_laplace_beltrami(self, name, rng):
        problem = get_problem(name)
        assert verify_load(problem, problem.surface(), rng) < 1e-8

    def test_wrong_load_detected(self, rng):
        problem = get_problem("sphere")
        problem.load = lambda X: 6.0 * X[..., 1]
        with pytest.raises(StudyError):
            verify_load(problem, sphere(), rng)

    def test_cap_boundary(self):
        problem = get_problem("sphere_cap")
        surface = sphere_cap()
        spec = problem.boundary_spec(surface)
        assert len(spec.dirichlet) == 2
        assert len(spec.neumann) == 2

    def test_closed_problems_have_no_boundary(self):
        assert get_problem("sphere").boundary_spec(sphere()).empty


def test_handle_study_errors():
    row = {}
    with handle_study_errors(row):
        raise SingularSystemError("matrix is singular")
    assert row["error"] == "SingularSystemError: matrix is singular"


def test_handle_study_errors_records_linalg_errors():
    row = {}
    with handle_study_errors(row):
        raise np.linalg.LinAlgError("Singular matrix")
    assert row["error"] == "LinAlgError: Singular matrix"


def test_handle_study_errors_lets_bugs_through():
    row = {}
    with pytest.raises(ValueError):
        with handle_study_errors(row):
            raise ValueError("shape mismatch")
    assert "error" not in row


def _broken_solve(system, **kwargs):
    raise SingularSystemError("matrix is singular")


def _label(gamma):
    return ";".join(repr(float(g)) for g in gamma)


def _condition_rows(cfg, zero_kappa=1e4, zero_error=None):
    """Hand-made condition rows: stabilized kappa 100 n^2, gamma = 0 kappa ``zero_kappa`` n^2."""
    rows = []
    for gamma, scale in ((cfg.gamma, 100.0), ([0.0], zero_kappa)):
        for n in cfg.meshes:
            level = []
            for s in range(cfg.samples):
                row = {"study": "condition", "gamma": _label(gamma), "n": n, "h": 1.0 / n,
                       "sample": s, "err_L2": 1e-3, "kappa": scale * n**2 * (1 + 0.1 * s)}
                if gamma == [0.0] and zero_error is not None:
                    row["error"] = zero_error
                    row["kappa"] = np.inf
                level.append(row)
            summary = {"study": "condition", "gamma": _label(gamma), "n": n, "h": 1.0 / n, "sample": "max"}
            summary["kappa"] = max(r["kappa"] for r in level)
            rows.extend(level + [summary])
    return rows


class TestStudies:
    def test_convergence_reproduces_polynomials(self):
        cfg = build_config({"problem": "flat2", "order": 2, "meshes": [4, 8], "check": True})
        rows = run_convergence(cfg)
        assert [r["n"] for r in rows] == [4, 8]
        assert all(r["err_L2"] < 1e-9 and r["err_energy"] < 1e-9 for r in rows)
        assert "mean" not in rows[0]
        check_study(cfg, rows)

    def test_closed_surface_mean(self):
        cfg = build_config({"problem": "sphere", "meshes": [4, 8]})
        rows = run_convergence(cfg)
        assert all(abs(r["mean"]) < 1e-9 for r in rows)
        assert "eoc_L2" in rows[1] and "eoc_L2" not in rows[0]

    def test_boundary_example(self):
        cfg = build_config({"study": "boundary", "problem": "flat_mixed", "meshes": [4, 8], "check": True})
        rows, state = run_boundary_example(cfg)
        assert state is not None and state.disc.n == 8
        assert all(r["study"] == "boundary" for r in rows)
        check_study(cfg, rows)

    def test_boundary_needs_boundary(self):
        with pytest.raises(ConfigError):
            run_boundary_example(build_config({"study": "boundary", "problem": "sphere", "meshes": [4]}))

    def test_rotation_without_rotation_has_zero_spread(self):
        cfg = build_config({"study": "rotation", "problem": "sphere", "meshes": [4], "samples": 2})
        rows = run_rotation_study(cfg, angle_sampler=_zero_angles)
        summary = rows[-1]
        assert summary["sample"] == "std"
        assert summary["err_L2"] > 0
        assert summary["rstd_L2"] < 1e-12
        assert len(rows) == 3

    def test_failures_are_recorded(self, monkeypatch):
        monkeypatch.setattr("cutpatch.harness.studies.solve", _broken_solve)
        cfg = build_config({"study": "rotation", "problem": "flat2", "meshes": [4], "samples": 2})
        rows = run_rotation_study(cfg, angle_sampler=_zero_angles)
        assert all(r["error"].startswith("SingularSystemError") for r in rows if r["sample"] != "std")
        assert "std_L2" not in rows[-1]

    def test_check_failure_raises(self, monkeypatch):
        monkeypatch.setattr("cutpatch.harness.studies.solve", _broken_solve)
        cfg = build_config({"problem": "flat2", "meshes": [4, 8], "check": True})
        rows = run_convergence(cfg)
        with pytest.raises(StudyError, match="configuration"):
            check_study(cfg, rows)

    def test_refinement_stops_at_first_failure(self, monkeypatch):
        calls = []

        def fails_second(system, **kwargs):
            calls.append(system.n)
            if len(calls) == 2:
                raise SingularSystemError("matrix is singular")
            return solve(system, **kwargs)

        monkeypatch.setattr("cutpatch.harness.studies.solve", fails_second)
        cfg = build_config({"problem": "flat2", "meshes": [4, 8, 16]})
        rows = run_convergence(cfg)
        assert [r["n"] for r in rows] == [4, 8]
        assert "error" not in rows[0]
        assert rows[1]["error"].startswith("SingularSystemError")
        assert len(calls) == 2

    def test_energy_rate_uses_study_tolerance(self):
        cfg = build_config({"study": "boundary", "problem": "sphere_cap", "meshes": [4, 8]})
        rows = [
            {"n": 4, "err_L2": 1e-2, "err_energy": 1e-1},
            {"n": 8, "err_L2": 2.5e-3, "err_energy": 4.3e-2, "eoc_L2": 2.0, "eoc_energy": 1.22},
        ]
        # 0.22 off is inside the convergence tolerance but not the boundary one
        check_convergence(rows, build_config({"problem": "sphere_cap", "meshes": [4, 8]}))
        with pytest.raises(StudyError, match="energy rate"):
            check_boundary(rows, cfg)

    def test_condition_rows_share_placements(self):
        cfg = build_config({"study": "condition", "problem": "flat2", "meshes": [4, 8],
                            "samples": 2, "gammas": [1e-2, 1.0]})
        rows = run_condition_study(cfg)
        assert [r["study"] for r in rows] == ["condition"] * 12 + ["gamma_sweep"] * 6
        assert [r["sample"] for r in rows[:3]] == [0, 1, "max"]
        for summary in (r for r in rows if r["sample"] == "max" and "kappa" in r):
            level = [r for r in rows if r["study"] == summary["study"] and r["n"] == summary["n"]
                     and r["gamma"] == summary["gamma"] and r["sample"] != "max"]
            assert summary["kappa"] == max(r["kappa"] for r in level if "error" not in r)
        ndof = {(r["n"], r["sample"]): r["ndof"] for r in rows[:6] if "ndof" in r}
        for r in rows[6:]:
            if "ndof" in r and r["sample"] != "max":
                assert r["ndof"] == ndof[(r["n"], r["sample"])]


class TestConditionChecks:
    @pytest.fixture
    def cfg(self):
        return build_config({"study": "condition", "problem": "sphere", "meshes": [4, 8], "samples": 2})

    def test_passes(self, cfg):
        check_conditioning(_condition_rows(cfg), cfg)

    def test_failed_zero_gamma_rows(self, cfg):
        rows = _condition_rows(cfg, zero_error="SingularSystemError: matrix is singular")
        with pytest.raises(StudyError, match="configuration"):
            check_conditioning(rows, cfg)

    def test_kernel_mismatch(self, cfg):
        rows = _condition_rows(cfg, zero_error="KernelDimensionError: 3 eigenvalues below tolerance")
        with pytest.raises(StudyError):
            check_conditioning(rows, cfg)

    def test_missing_kappa(self, cfg):
        rows = _condition_rows(cfg)
        del rows[-2]["kappa"]
        with pytest.raises(StudyError, match="infinite"):
            check_conditioning(rows, cfg)

    def test_ratio_below_ten(self, cfg):
        with pytest.raises(StudyError, match="tenfold"):
            check_conditioning(_condition_rows(cfg, zero_kappa=500.0), cfg)

    def test_slope(self, cfg):
        cfg.meshes = [4, 8, 16]
        rows = _condition_rows(cfg)
        check_conditioning(rows, cfg)
        for r in rows:
            r["kappa"] /= r["n"]
        with pytest.raises(StudyError, match="slope"):
            check_conditioning(rows, cfg)

    def test_sweep(self, cfg):
        rows = _condition_rows(cfg)
        sweep = [{"study": "gamma_sweep", "gamma": _label([g]), "n": 8, "h": 0.125, "sample": "max",
                  "kappa": kappa, "err_L2": err}
                 for g, kappa, err in ((1e-6, 1e8, 1e-3), (1e-4, 1e6, 1e-3), (1e-2, 1e5, 1.5e-3), (1.0, 1e5, 1e-3))]
        check_conditioning(rows + sweep, cfg)
        sweep[2]["err_L2"] = 3e-3
        with pytest.raises(StudyError, match="sweep minimum"):
            check_conditioning(rows + sweep, cfg)
        sweep[2]["err_L2"] = 1.5e-3
        sweep[1]["kappa"] = 1e9
        with pytest.raises(StudyError, match="kappa increases"):
            check_conditioning(rows + sweep, cfg)


class TestFullStudies:
    """Acceptance checks on complete studies; these take minutes."""

    @pytest.mark.slow
    def test_sphere_rates(self):
        cfg = build_config({"problem": "sphere", "meshes": [8, 16, 32], "check": True})
        rows = run_convergence(cfg)
        assert rows[-1]["eoc_L2"] == pytest.approx(2.0, abs=0.3)
        assert rows[-1]["eoc_energy"] == pytest.approx(1.0, abs=0.3)
        check_study(cfg, rows)

    @pytest.mark.slow
    @pytest.mark.parametrize("order", [1, 2])
    def test_torus_rates(self, order):
        cfg = build_config({"problem": "torus", "order": order, "meshes": [8, 16, 32], "check": True})
        check_study(cfg, run_convergence(cfg))

    @pytest.mark.slow
    def test_sphere_conditioning(self):
        cfg = build_config({"study": "condition", "problem": "sphere", "meshes": [8, 16, 32],
                            "samples": 4, "check": True})
        rows = run_condition_study(cfg)
        check_study(cfg, rows)
        peaks = [r for r in rows if r["study"] == "condition" and r["sample"] == "max"]
        assert all(np.isfinite(r["kappa"]) and r["kappa"] > 1 for r in peaks)

    @pytest.mark.slow
    def test_sphere_rotation(self):
        cfg = build_config({"study": "rotation", "problem": "sphere", "meshes": [8, 16, 32],
                            "samples": 10, "check": True})
        check_study(cfg, run_rotation_study(cfg))


class TestOutput:
    def test_csv_columns_and_determinism(self, out_dir):
        cfg = build_config({"problem": "flat2", "meshes": [4, 8]})
        first, second = out_dir / "a.csv", out_dir / "b.csv"
        write_csv(run_convergence(cfg), first)
        write_csv(run_convergence(cfg), second)
        assert first.read_bytes() == second.read_bytes()
        with open(first) as f:
            reader = csv.DictReader(f)
            assert reader.fieldnames == CSV_COLUMNS
            rows = list(reader)
        assert rows[0]["wall_ms"] == ""
        assert float(rows[1]["h"]) == 0.125

    def test_timing_column(self):
        cfg = build_config({"problem": "flat2", "meshes": [4], "timing": True})
        assert run_convergence(cfg)[0]["wall_ms"] >= 0.0

    def test_gnuplot_script(self, out_dir):
        script = write_gnuplot_script(out_dir / "a.csv", "convergence", out_dir / "a.gp")
        text = script.read_text()
        assert "set logscale xy" in text
        assert text.count("with linespoints") == 2
