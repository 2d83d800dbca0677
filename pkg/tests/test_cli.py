"""Command-line harness: schemas, exit codes, reproducible artifacts."""

import json

from oupinball import cli


def _run(args):
    return cli.main([str(a) for a in args])


def _write_config(tmp_path, name, payload):
    p = tmp_path / name
    p.write_text(json.dumps(payload))
    return p


BALL_SPEC = {"d": 2, "lam": 1.0,
             "obstacle": {"type": "ball", "center": [0, 0], "r": 1.0}}


class TestSchema:
    def test_print_schema_global(self, capsys):
        assert _run(["--print-schema"]) == 0
        out = capsys.readouterr().out
        blob = json.loads(out)
        assert set(blob["commands"]) == {"bounds", "spectral", "simulate",
                                         "exit-time", "cheeger", "sweep"}

    def test_print_schema_command(self, capsys):
        assert _run(["simulate", "--print-schema"]) == 0
        blob = json.loads(capsys.readouterr().out)
        assert "seed" in blob["required"]

    def test_unknown_keys_rejected(self, tmp_path):
        cfg = _write_config(tmp_path, "c.json",
                            {"spec": BALL_SPEC, "bogus_key": 1})
        assert _run(["bounds", "--config", cfg, "--out", tmp_path / "o"]) == 2

    def test_missing_spec_rejected(self, tmp_path):
        cfg = _write_config(tmp_path, "c.json", {"constants": {}})
        assert _run(["bounds", "--config", cfg, "--out", tmp_path / "o"]) == 2

    def test_seed_mandatory_for_mc(self, tmp_path):
        cfg = _write_config(tmp_path, "c.json", {
            "spec": {"d": 2, "lam": 1.0, "obstacle": {"type": "none"}},
            "dt": 0.005, "horizon": 60.0, "n_paths": 8})
        assert _run(["simulate", "--config", cfg, "--out", tmp_path / "o"]) == 2

    def test_unreadable_config(self, tmp_path):
        assert _run(["bounds", "--config", tmp_path / "nope.json"]) == 2


class TestBoundsCommand:
    def test_outputs_and_determinism(self, tmp_path):
        cfg = _write_config(tmp_path, "c.json", {"spec": BALL_SPEC})
        assert _run(["bounds", "--config", cfg, "--out", tmp_path / "a"]) == 0
        assert _run(["bounds", "--config", cfg, "--out", tmp_path / "b"]) == 0
        csv_a = (tmp_path / "a" / "bounds.csv").read_bytes()
        csv_b = (tmp_path / "b" / "bounds.csv").read_bytes()
        assert csv_a == csv_b
        assert (tmp_path / "a" / "bounds.json").read_bytes() == \
            (tmp_path / "b" / "bounds.json").read_bytes()
        blob = json.loads((tmp_path / "a" / "bounds.json").read_text())
        anchors = {r["anchor"] for r in blob["reports"]}
        assert "centered sandwich lower" in anchors
        assert blob["best_explicit_lower"] <= blob["best_explicit_upper"]
        assert (tmp_path / "a" / "bounds.meta.json").exists()

    def test_trap_catalogue_row(self, tmp_path):
        cfg = _write_config(tmp_path, "c.json", {"spec": {
            "d": 2, "lam": 1.0, "obstacle": {"type": "trap", "y": 5.0,
                                             "alpha": 1.0}}})
        assert _run(["bounds", "--config", cfg, "--out", tmp_path / "o"]) == 0
        blob = json.loads((tmp_path / "o" / "bounds.json").read_text())
        anchors = {r["anchor"] for r in blob["reports"]}
        assert "trap two-set lower" in anchors

    def test_no_obstacle_baseline(self, tmp_path):
        cfg = _write_config(tmp_path, "c.json", {"spec": {
            "d": 2, "lam": 1.0, "obstacle": {"type": "none"}}})
        assert _run(["bounds", "--config", cfg, "--out", tmp_path / "o"]) == 0
        blob = json.loads((tmp_path / "o" / "bounds.json").read_text())
        assert blob["best_explicit_lower"] == blob["best_explicit_upper"] == 0.5


class TestSpectralCommand:
    def test_baseline_estimate(self, tmp_path):
        cfg = _write_config(tmp_path, "c.json", {
            "spec": {"d": 2, "lam": 1.0, "obstacle": {"type": "none"}},
            "h_list": [0.2, 0.1]})
        assert _run(["spectral", "--config", cfg, "--out", tmp_path / "o"]) == 0
        blob = json.loads((tmp_path / "o" / "spectral.json").read_text())
        assert abs(blob["estimate"]["value"] - 0.5) < 0.02
        refinement = (tmp_path / "o" / "refinement.csv").read_text()
        assert refinement.startswith("h,n_cells,gap,poincare")

    def test_disconnected_exit_code(self, tmp_path):
        cfg = _write_config(tmp_path, "c.json", {
            "spec": {"d": 2, "lam": 1.0,
                     "obstacle": {"type": "shell", "center": [0, 0],
                                  "r": 2.0, "R": 2.3}},
            "h_list": [0.6, 0.5], "box_factor": 4})
        assert _run(["spectral", "--config", cfg, "--out", tmp_path / "o"]) == 3


class TestMonteCarloCommands:
    def test_exit_time_table(self, tmp_path):
        cfg = _write_config(tmp_path, "c.json", {
            "lam": 1.0, "r": 1.0, "dt": 0.002, "n_paths": 4000, "seed": 42,
            "theta_grid": [0.5, 1.0]})
        assert _run(["exit-time", "--config", cfg, "--out", tmp_path / "o"]) == 0
        lines = (tmp_path / "o" / "exit_time.csv").read_text().strip().splitlines()
        assert lines[0].startswith("theta,mc,mc_se,transform,z")
        assert len(lines) == 3
        for line in lines[1:]:
            z = abs(float(line.split(",")[4]))
            assert z < 4.0
        blob = json.loads((tmp_path / "o" / "exit_time.json").read_text())
        assert blob["beta_star"] > 0

    def test_seed_override(self, tmp_path):
        base = {"lam": 1.0, "r": 1.0, "dt": 0.005, "n_paths": 500, "seed": 1,
                "theta_grid": [1.0]}
        cfg = _write_config(tmp_path, "c.json", base)
        _run(["exit-time", "--config", cfg, "--out", tmp_path / "a"])
        _run(["exit-time", "--config", cfg, "--out", tmp_path / "b",
              "--seed", "2"])
        a = (tmp_path / "a" / "exit_time.csv").read_text()
        b = (tmp_path / "b" / "exit_time.csv").read_text()
        assert a != b

    def test_simulate_small(self, tmp_path):
        cfg = _write_config(tmp_path, "c.json", {
            "spec": {"d": 2, "lam": 1.0, "obstacle": {"type": "none"}},
            "dt": 0.005, "horizon": 60.0, "n_paths": 128, "seed": 3})
        assert _run(["simulate", "--config", cfg, "--out", tmp_path / "o"]) == 0
        blob = json.loads((tmp_path / "o" / "simulate.json").read_text())
        assert blob["occupation"]["pass"] is True
        paths = (tmp_path / "o" / "paths.csv").read_text().splitlines()
        assert len(paths) == 129


class TestCheegerAndSweep:
    def test_cheeger_hypercube(self, tmp_path):
        cfg = _write_config(tmp_path, "c.json", {"spec": {
            "d": 2, "lam": 1.0,
            "obstacle": {"type": "hypercube", "center": [4, 0], "r": 2.0}}})
        assert _run(["cheeger", "--config", cfg, "--out", tmp_path / "o"]) == 0
        blob = json.loads((tmp_path / "o" / "cheeger.json").read_text())
        rows = (tmp_path / "o" / "cheeger.csv").read_text().splitlines()
        assert len(rows) >= 2
        ratio = float(rows[1].split(",")[4])
        assert ratio >= blob["ratio_floor"]

    def test_trap_sweep_explodes(self, tmp_path):
        cfg = _write_config(tmp_path, "c.json", {
            "spec": {"d": 2, "lam": 1.0,
                     "obstacle": {"type": "trap", "y": 3.0, "alpha": 1.0}},
            "parameter": "y1", "values": [3.0, 5.0, 7.0, 9.0]})
        assert _run(["sweep", "--config", cfg, "--out", tmp_path / "o",
                     "--threads", "2"]) == 0
        lines = (tmp_path / "o" / "sweep.csv").read_text().strip().splitlines()
        lows = [float(line.split(",")[2]) for line in lines[1:]]
        assert all(a < b for a, b in zip(lows, lows[1:]))
        assert (tmp_path / "o" / "point_000.json").exists()

    def test_sweep_deterministic_across_threads(self, tmp_path):
        cfg = _write_config(tmp_path, "c.json", {
            "spec": {"d": 2, "lam": 1.0,
                     "obstacle": {"type": "ball", "center": [0, 0], "r": 0.5}},
            "parameter": "r", "values": [0.5, 1.0, 1.5]})
        _run(["sweep", "--config", cfg, "--out", tmp_path / "a", "--threads", "1"])
        _run(["sweep", "--config", cfg, "--out", tmp_path / "b", "--threads", "3"])
        assert (tmp_path / "a" / "sweep.csv").read_bytes() == \
            (tmp_path / "b" / "sweep.csv").read_bytes()


class TestErrorExitCodes:
    def test_special_function_failure_is_exit_5(self, tmp_path):
        # lam r^2 far below the catalogued regime: no threshold root exists
        cfg = _write_config(tmp_path, "c.json", {
            "lam": 1.0, "r": 0.05, "dt": 0.005, "n_paths": 64, "seed": 4,
            "theta_grid": [0.5]})
        assert _run(["exit-time", "--config", cfg, "--out", tmp_path / "o"]) == 5

    def test_all_censored_is_exit_4(self, tmp_path):
        # huge interval, tiny horizon: no path exits
        cfg = _write_config(tmp_path, "c.json", {
            "lam": 1.0, "r": 12.0, "dt": 0.005, "n_paths": 32, "seed": 4,
            "theta_grid": [0.5], "horizon": 0.05})
        assert _run(["exit-time", "--config", cfg, "--out", tmp_path / "o"]) == 4


class TestSpectralSweep:
    def test_phase_transition_picture(self, tmp_path):
        cfg = _write_config(tmp_path, "c.json", {
            "spec": {"d": 2, "lam": 1.0,
                     "obstacle": {"type": "hypercube", "center": [4, 0],
                                  "r": 0.1}},
            "parameter": "r", "values": [0.1, 2.0],
            "run_spectral": True, "h_list": [0.2, 0.1]})
        assert _run(["sweep", "--config", cfg, "--out", tmp_path / "o"]) == 0
        lines = (tmp_path / "o" / "sweep.csv").read_text().strip().splitlines()
        small = float(lines[1].split(",")[4])
        large = float(lines[2].split(",")[4])
        assert small < 1.0 and large > 10.0
        blob = json.loads((tmp_path / "o" / "point_001.json").read_text())
        verdicts = {v["name"]: v["status"] for v in blob["verdicts"]}
        assert verdicts.get("inside-envelope") == "PASS"
