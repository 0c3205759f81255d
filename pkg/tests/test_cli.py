"""Command-line front end: artifact round-trips, exit codes, and flag
handling. Heavy solve paths are covered by the acceptance suite."""

import numpy as np
import pytest

from ascentopt import cli
from ascentopt.config import RunConfig
from ascentopt.environment import ScaleSet
from ascentopt.initial_guess import generate_initial_guess


@pytest.fixture(scope="module")
def guess_ref():
    cfg = RunConfig()
    earth = cfg.build_earth()
    scales = ScaleSet.from_earth(earth)
    plan = cfg.build_plan(earth=earth)
    return generate_initial_guess(plan, cfg.build_vehicle(),
                                  cfg.build_guess_params(), earth, scales)


class TestFormatting:
    def test_fmt_types(self):
        assert cli._fmt(True) == "true"
        assert cli._fmt(False) == "false"
        assert cli._fmt(np.int64(3)) == "3"
        assert cli._fmt(0.1) == "0.10000000000000001"
        assert cli._fmt("x..y") == "x..y"

    def test_summary_layout(self, tmp_path):
        p = tmp_path / "s.txt"
        cli.write_summary(p, [("a", 1), ("b", 2.5), ("c", True)])
        assert p.read_text() == "a = 1\nb = 2.5\nc = true\n"


class TestTrajectoryArtifact:
    def test_round_trip(self, tmp_path, guess_ref):
        p = tmp_path / "traj.csv"
        cli.write_trajectory(p, guess_ref)
        back = cli.read_trajectory(p)
        assert back.provenance == "artifact"
        assert set(back.states) == set(guess_ref.states)
        for i in guess_ref.states:
            assert np.array_equal(back.states[i],
                                  np.asarray(guess_ref.states[i]))
        for i in guess_ref.controls:
            assert np.array_equal(back.controls[i],
                                  np.asarray(guess_ref.controls[i]))
        for i in guess_ref.sigmas:
            assert back.sigmas[i] == float(guess_ref.sigmas[i])

    def test_write_is_deterministic(self, tmp_path, guess_ref):
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        cli.write_trajectory(p1, guess_ref)
        cli.write_trajectory(p2, guess_ref)
        assert p1.read_bytes() == p2.read_bytes()

    def test_truncated_row_reports_line(self, tmp_path, guess_ref):
        p = tmp_path / "traj.csv"
        cli.write_trajectory(p, guess_ref)
        lines = p.read_text().splitlines()
        lines[4] = lines[4].rsplit(",", 5)[0]  # chop numeric fields
        p.write_text("\n".join(lines) + "\n")
        with pytest.raises(ValueError, match="line 5"):
            cli.read_trajectory(p)

    def test_wrong_header_rejected(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("time,x,y\n0,1,2\n")
        with pytest.raises(ValueError, match="line 1"):
            cli.read_trajectory(p)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="cannot read"):
            cli.read_trajectory(tmp_path / "absent.csv")

    def test_non_contiguous_nodes_rejected(self, tmp_path, guess_ref):
        p = tmp_path / "traj.csv"
        cli.write_trajectory(p, guess_ref)
        lines = p.read_text().splitlines()
        del lines[2]  # drop a state node from the middle of phase 1
        p.write_text("\n".join(lines) + "\n")
        with pytest.raises(ValueError, match="non-contiguous"):
            cli.read_trajectory(p)


class TestExitCodes:
    def test_malformed_config_exits_2_without_artifacts(self, tmp_path,
                                                        capsys):
        bad = tmp_path / "bad.yaml"
        bad.write_text("missoin: {}\n")
        out = tmp_path / "out"
        rc = cli.main(["--config", str(bad), "--out-dir", str(out), "solve"])
        assert rc == cli.EXIT_CONFIG
        assert "configuration error" in capsys.readouterr().err
        assert not out.exists()

    def test_conflicting_flags_exit_2(self, capsys):
        rc = cli.main(["--splash-lat", "60", "--unconstrained", "solve"])
        assert rc == cli.EXIT_CONFIG
        assert "conflicts" in capsys.readouterr().err

    def test_bad_artifact_exits_2(self, tmp_path, capsys):
        art = tmp_path / "traj.csv"
        art.write_text("garbage\n")
        rc = cli.main(["--out-dir", str(tmp_path / "out"), "simulate",
                       str(art)])
        assert rc == cli.EXIT_CONFIG
        assert "bad trajectory artifact" in capsys.readouterr().err

    def test_missing_command_rejected_by_parser(self):
        with pytest.raises(SystemExit):
            cli.build_parser().parse_args([])


class TestGuessCommand:
    def test_accepted_guess_writes_artifact(self, tmp_path, capsys):
        out = tmp_path / "out"
        rc = cli.main(["--out-dir", str(out), "guess"])
        assert rc == cli.EXIT_OK
        assert (out / "guess_trajectory.csv").exists()
        assert (out / "guess_summary.txt").read_text() == "accepted = true\n"

    def test_rejected_guess_exits_1_with_reason(self, tmp_path, capsys):
        conf = tmp_path / "run.yaml"
        conf.write_text("guess:\n  kick_angle_deg: 5.0\n")
        out = tmp_path / "out"
        rc = cli.main(["--config", str(conf), "--out-dir", str(out), "guess"])
        assert rc == cli.EXIT_NOT_CONVERGED
        text = (out / "guess_summary.txt").read_text()
        assert text.startswith("accepted = false\nreason = ")


class TestSimulateCommand:
    def test_simulate_guess_artifact(self, tmp_path, guess_ref, capsys):
        art = tmp_path / "traj.csv"
        cli.write_trajectory(art, guess_ref)
        out = tmp_path / "out"
        rc = cli.main(["--out-dir", str(out), "--quiet", "simulate",
                       str(art)])
        assert rc == cli.EXIT_OK
        summary = dict(
            line.split(" = ") for line in
            (out / "simulate_summary.txt").read_text().splitlines())
        assert {"splash_latitude_deg", "sma_error_m", "eccentricity",
                "max_heat_flux_w_m2"} <= set(summary)
        assert (out / "propagation.csv").exists()
        assert (out / "return.csv").exists()
