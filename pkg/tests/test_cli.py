"""Command-line interface: exit codes, outputs, determinism, round-trips."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

CLI = [sys.executable, "-m", "resona.cli"]


def run_cli(*args, env_extra=None, timeout=400):
    env = os.environ.copy()
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        CLI + list(args), capture_output=True, text=True, env=env, timeout=timeout
    )


class TestCapacitanceCommand:
    def test_unit_sphere_value_and_summary(self, tmp_path):
        out = tmp_path / "cap.csv"
        proc = run_cli(
            "capacitance", "--sphere", "1.0", "--refinement", "2",
            "--out", str(out), "--no-plot",
        )
        assert proc.returncode == 0, proc.stderr
        summary = json.loads(proc.stdout)
        assert summary["C"][0][0] == pytest.approx(4 * np.pi, rel=0.02)
        assert out.exists()

    def test_mesh_file_source(self, tmp_path):
        from resona.geometry import make_sphere_mesh, write_tri

        tri = tmp_path / "s.tri"
        write_tri(make_sphere_mesh((0, 0, 0), 1.0, 1), tri)
        proc = run_cli("capacitance", "--mesh", str(tri), "--out",
                       str(tmp_path / "c.csv"), "--no-plot")
        assert proc.returncode == 0

    def test_exactly_one_geometry_source(self, tmp_path):
        proc = run_cli(
            "capacitance", "--sphere", "1.0", "--dimer", "1.0", "0.5",
            "--out", str(tmp_path / "c.csv"),
        )
        assert proc.returncode == 2

    def test_missing_mesh_exit_code(self, tmp_path):
        proc = run_cli("capacitance", "--mesh", str(tmp_path / "nope.tri"))
        assert proc.returncode == 2


class TestBandCommand:
    def test_row_count_and_plot(self, tmp_path):
        out = tmp_path / "band.csv"
        proc = run_cli(
            "band", "--path", "G", "X", "M", "G", "--n", "4", "--radius", "0.25",
            "--refinement", "0", "--out", str(out),
        )
        assert proc.returncode == 0, proc.stderr
        rows = out.read_text().strip().splitlines()
        assert len(rows) == 1 + 12 + 1  # header + 3 legs * 4 + start
        assert (tmp_path / "band.png").exists()

    def test_csv_round_trip_is_lossless(self, tmp_path):
        out = tmp_path / "band.csv"
        run_cli(
            "band", "--path", "G", "M", "--n", "3", "--radius", "0.25",
            "--refinement", "0", "--out", str(out), "--no-plot",
        )
        header, *rows = out.read_text().strip().splitlines()
        parsed = np.array([[float(v) for v in r.split(",")] for r in rows])
        from resona.bands import band_sweep, brillouin_path
        from resona.geometry import cubic_lattice, make_sphere_mesh

        pts, _ = brillouin_path(["G", "M"], 3, offset=1e-3)
        table = band_sweep(
            make_sphere_mesh((0, 0, 0), 0.25, 0), cubic_lattice(1.0), pts, 1e-3
        )
        assert np.array_equal(parsed[:, 4], table.omegas)  # bitwise round trip

    def test_determinism_under_thread_count(self, tmp_path):
        outs = []
        for threads, name in (("1", "a.csv"), ("4", "b.csv")):
            out = tmp_path / name
            proc = run_cli(
                "band", "--path", "X", "M", "--n", "4", "--radius", "0.25",
                "--refinement", "0", "--out", str(out), "--no-plot",
                env_extra={"RESONA_THREADS": threads},
            )
            assert proc.returncode == 0, proc.stderr
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestSshCommand:
    def test_topology_report(self, tmp_path):
        out = tmp_path / "ssh.csv"
        proc = run_cli(
            "ssh", "--d", "0.7", "--L", "1.0", "--radius", "0.05",
            "--samples", "8", "--out", str(out), "--no-plot",
        )
        assert proc.returncode == 0, proc.stderr
        summary = json.loads(proc.stdout)
        assert summary["zak"] in (0.0, np.pi)
        topo = json.loads((tmp_path / "ssh_topology.json").read_text())
        assert topo["zak"] == summary["zak"]
        assert topo["gapped"] is True


class TestEffectiveCommand:
    def test_sweep_columns(self, tmp_path):
        out = tmp_path / "eff.csv"
        proc = run_cli("effective", "--out", str(out), "--no-plot")
        assert proc.returncode == 0, proc.stderr
        header = out.read_text().splitlines()[0].split(",")
        assert header == ["omega", "lambda", "re_m2", "m1_eigmin", "both_negative"]


class TestTwoSphereCommand:
    def test_rows_and_figure(self, tmp_path):
        out = tmp_path / "two.csv"
        proc = run_cli(
            "two-sphere", "--eps", "0.5", "0.25", "--out", str(out),
        )
        assert proc.returncode == 0, proc.stderr
        assert len(out.read_text().strip().splitlines()) == 3
        assert (tmp_path / "two.png").exists()


class TestConfig:
    def test_config_file_supplies_defaults(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"schema": 1, "eps": [0.5], "no_plot": True}))
        out = tmp_path / "two.csv"
        proc = run_cli("two-sphere", "--config", str(cfg), "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        assert len(out.read_text().strip().splitlines()) == 2

    def test_flags_override_config(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"schema": 1, "eps": [0.5, 0.25, 0.1]}))
        out = tmp_path / "two.csv"
        proc = run_cli(
            "two-sphere", "--config", str(cfg), "--eps", "0.5", "--out", str(out),
            "--no-plot",
        )
        assert proc.returncode == 0
        assert len(out.read_text().strip().splitlines()) == 2

    def test_wrong_schema_rejected(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"schema": 99}))
        proc = run_cli("two-sphere", "--config", str(cfg))
        assert proc.returncode == 2

    def test_unknown_field_rejected(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"schema": 1, "bogus": 1}))
        proc = run_cli("two-sphere", "--config", str(cfg))
        assert proc.returncode == 2


class TestNumericalFailureExitCode:
    def test_overlapping_dimer_is_a_config_error(self, tmp_path):
        proc = run_cli("capacitance", "--dimer", "1.0", "-0.5",
                       "--out", str(tmp_path / "c.csv"))
        assert proc.returncode == 2


@pytest.mark.slow
class TestCochleaCommand:
    def test_tone_run_writes_spectrum_and_frames(self, tmp_path):
        out = tmp_path / "coch.csv"
        proc = run_cli(
            "cochlea", "--tone", "1000", "--duration", "0.05",
            "--out", str(out), "--no-plot",
        )
        assert proc.returncode == 0, proc.stderr
        summary = json.loads(proc.stdout)
        assert summary["channels"] == 22
        spectrum = json.loads((tmp_path / "coch_spectrum.json").read_text())
        assert len(spectrum["radii"]) == 22
        header = out.read_text().splitlines()[0].split(",")
        assert header[0] == "t" and header[-1] == "a_22"

    def test_binary_frames(self, tmp_path):
        out = tmp_path / "coch.bin"
        proc = run_cli(
            "cochlea", "--tone", "2000", "--duration", "0.03",
            "--format", "bin", "--out", str(out), "--no-plot",
        )
        assert proc.returncode == 0, proc.stderr
        blob = np.frombuffer(out.read_bytes(), dtype="<f8")
        assert blob.size % 22 == 0

    def test_wav_input(self, tmp_path):
        import wave

        fs = 44100
        t = np.arange(int(0.05 * fs)) / fs
        tone = (20000 * np.sin(2 * np.pi * 900.0 * t)).astype(np.int16)
        wav = tmp_path / "in.wav"
        with wave.open(str(wav), "wb") as fh:
            fh.setnchannels(1)
            fh.setsampwidth(2)
            fh.setframerate(fs)
            fh.writeframes(tone.tobytes())
        out = tmp_path / "coch.csv"
        proc = run_cli("cochlea", "--wav", str(wav), "--out", str(out), "--no-plot")
        assert proc.returncode == 0, proc.stderr
        assert out.exists()
