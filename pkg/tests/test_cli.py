import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from swapnet import channels, cli, fileio, networks, qmath


def call(*argv):
    buf = io.StringIO()
    status = cli.main(list(argv), stdout=buf)
    return status, buf.getvalue()


def doc_of(*argv):
    status, out = call(*argv)
    assert status == 0, out
    return json.loads(out)


@pytest.fixture
def state_file(tmp_path):
    path = tmp_path / "rho.json"
    fileio.save_matrix(path, qmath.random_density(3, 2, seed=11))
    return path


class TestExactCommands:
    def test_purity_of_mixed_qubit(self):
        assert doc_of("purity", "--in", "mixed:2")["result"]["value"] == pytest.approx(0.5, abs=1e-12)

    def test_purity_circuit(self, state_file):
        rho = fileio.load_density(state_file)
        out = doc_of("purity", "--in", str(state_file), "--via", "circuit")["result"]["value"]
        assert out == pytest.approx(networks.purity(rho), abs=1e-10)

    def test_overlap(self):
        out = doc_of("overlap", "--in", "basis:2:0", "--in", "bloch:1,0,0")["result"]["value"]
        assert out == pytest.approx(0.5, abs=1e-12)

    def test_spectrum(self):
        out = doc_of("spectrum", "--in", "diag:0.5,0.3,0.2")["result"]["eigenvalues"]
        assert np.allclose(out, [0.5, 0.3, 0.2], atol=1e-10)

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_spectrum_paths_agree(self, d):
        ref = f"random:{d}:{d}:{d + 7}"
        a = doc_of("spectrum", "--in", ref, "--via", "circuit")["result"]["eigenvalues"]
        b = doc_of("spectrum", "--in", ref, "--via", "matpow")["result"]["eigenvalues"]
        assert np.max(np.abs(np.subtract(a, b))) <= 1e-9

    @pytest.mark.parametrize("cmd,expected", [("eigmax", 0.6), ("eigmin", 0.1)])
    def test_eig(self, cmd, expected):
        res = doc_of(cmd, "--in", "diag:0.6,0.3,0.1")["result"]
        assert res["eigenvalue"] == pytest.approx(expected, abs=1e-6)
        assert res["converged"]
        assert res["basins"]

    def test_expect(self, tmp_path):
        a = qmath.random_hermitian(2, seed=3)
        obs = tmp_path / "a.json"
        fileio.save_matrix(obs, a)
        rho = qmath.bloch_state(0.1, 0.2, 0.3)
        out = doc_of("expect", "--in", "bloch:0.1,0.2,0.3", "--observable", str(obs))["result"]["value"]
        assert out == pytest.approx(np.trace(a @ rho.matrix).real, abs=1e-10)

    def test_tomo(self, state_file):
        res = doc_of("tomo", "--in", str(state_file))["result"]
        assert res["trace_distance_to_input"] <= 1e-10
        assert res["queries"] == 9

    def test_choi(self):
        res = doc_of("choi", "--channel", "identity")["result"]
        assert res["lambda_max"] == pytest.approx(1.0)
        assert res["purity"] == pytest.approx(1.0)
        assert res["marginal_deviation"] <= 1e-12

    def test_capacity(self):
        res = doc_of("capacity", "--channel", "depolarizing:0.8")["result"]
        assert res["lambda_max"] == pytest.approx(0.4, abs=1e-10)
        assert res["positive"] is False

    def test_capacity_search(self):
        res = doc_of("capacity", "--channel", "dephasing:0.3", "--method", "search")["result"]
        assert res["lambda_max"] == pytest.approx(0.85, abs=1e-6)
        assert res["positive"] is True

    def test_capacity_channel_file(self, tmp_path):
        path = tmp_path / "ch.json"
        path.write_text(json.dumps(fileio.channel_to_dict(channels.amplitude_damping(0.4))))
        res = doc_of("capacity", "--channel", str(path))["result"]
        ref = qmath.eigenvalues(channels.choi_state(channels.amplitude_damping(0.4)).matrix)[0]
        assert res["lambda_max"] == pytest.approx(ref, abs=1e-12)

    def test_interfere(self, tmp_path):
        u = tmp_path / "u.json"
        fileio.save_matrix(u, qmath.PAULI_Z)
        res = doc_of("interfere", "--in", "basis:2:0", "--unitary", str(u), "--phi", "0")["result"]
        assert res["p0"] == pytest.approx(1.0)
        assert res["visibility"] == pytest.approx(1.0)

    def test_basis_scan(self):
        res = doc_of("interfere", "--in", "bloch:0.3,-0.2,0.5", "--basis-scan")["result"]
        e = res["pauli_expectations"]
        assert [e["X"], e["Y"], e["Z"]] == pytest.approx([0.3, -0.2, 0.5], abs=1e-12)

    def test_spec_echo_and_inputs(self, state_file):
        doc = doc_of("purity", "--in", str(state_file))
        assert doc["spec"]["mode"] == "exact" and doc["spec"]["shots"] is None
        assert len(doc["inputs"][0]["sha256"]) == 64


class TestSampled:
    ARGS = ("purity", "--in", "random:2:2:5", "--mode", "sampled", "--shots", "5000", "--seed", "42")

    def test_estimate_fields(self):
        doc = doc_of(*self.ARGS)
        est = doc["estimate"]
        assert est["shots"] == 5000
        assert est["ci_low"] <= est["point"] <= est["ci_high"]
        rho = qmath.random_density(2, 2, seed=5)
        assert abs(est["point"] - networks.purity(rho)) < 5 * est["std_error"] + 1e-3

    def test_byte_identical(self):
        assert call(*self.ARGS)[1] == call(*self.ARGS)[1]

    def test_subprocess_byte_identical(self):
        cmd = [sys.executable, "-m", "swapnet", *self.ARGS]
        first = subprocess.run(cmd, capture_output=True, check=True).stdout
        second = subprocess.run(cmd, capture_output=True, check=True).stdout
        assert first == second

    def test_seed_changes_output(self):
        a = doc_of(*self.ARGS)["estimate"]["p0_hat"]
        b = doc_of(*self.ARGS[:-1], "43")["estimate"]["p0_hat"]
        assert a != b

    def test_requires_shots(self):
        status, out = call("purity", "--in", "mixed:2", "--mode", "sampled")
        assert status == 2
        assert json.loads(out)["error"]["status"] == 2

    def test_repeat_jobs_order(self):
        base = (*self.ARGS, "--repeat", "6")
        serial = json.loads(call(*base)[1])
        threaded = json.loads(call(*base, "--jobs", "4")[1])
        assert cli.canonical_json(serial["result"]) == cli.canonical_json(threaded["result"])
        assert serial["estimates"] == threaded["estimates"]
        reps = serial["result"]["repetitions"]
        assert len(reps) == 6 and len({r["value"] for r in reps}) > 1

    def test_sampled_spectrum(self):
        res = doc_of("spectrum", "--in", "diag:0.8,0.2", "--mode", "sampled", "--shots", "200000", "--seed", "1")
        assert np.allclose(res["result"]["eigenvalues"], [0.8, 0.2], atol=0.02)
        assert len(res["estimates"]) == 1

    def test_sampled_capacity(self):
        res = doc_of("capacity", "--channel", "identity", "--mode", "sampled", "--shots", "20000", "--seed", "3")
        assert res["result"]["positive"] is True

    def test_sampled_tomo_bloch(self):
        res = doc_of("tomo", "--in", "bloch:0,0,0.6", "--probes", "bloch", "--mode", "sampled",
                     "--shots", "30000", "--seed", "9")["result"]
        assert res["shots_per_probe"] == 10000
        assert res["trace_distance_to_input"] < 0.05


class TestFormats:
    def test_json_parse_back(self):
        status, out = call("choi", "--channel", "dephasing:0.5")
        doc = json.loads(out)
        m = fileio.matrix_from_dict(doc["result"]["choi"])
        assert np.allclose(m, channels.choi_state(channels.dephasing(0.5)).matrix, atol=1e-15)

    def test_canonical_float_digits(self):
        assert cli.canonical_json({"b": 0.1, "a": [1, -0.0, float("nan")]}) == '{"a":[1,0,null],"b":0.10000000000000001}\n'

    def test_csv_estimates(self):
        status, out = call(*TestSampled.ARGS, "--format", "csv")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert status == 0 and len(rows) == 1
        assert int(rows[0]["shots"]) == 5000
        assert float(rows[0]["ci_low"]) <= float(rows[0]["point"]) <= float(rows[0]["ci_high"])

    def test_csv_key_value(self):
        status, out = call("capacity", "--channel", "depolarizing:0.8", "--format", "csv")
        rows = dict(csv.reader(io.StringIO(out)))
        assert float(rows["lambda_max"]) == pytest.approx(0.4)
        assert rows["positive"] == "false"

    def test_out_file(self, tmp_path):
        path = tmp_path / "out.json"
        status, out = call("purity", "--in", "mixed:2", "--out", str(path))
        assert status == 0 and out == ""
        assert json.loads(path.read_text())["result"]["value"] == pytest.approx(0.5)

    def test_missing_directory(self, tmp_path):
        missing = tmp_path / "nope" / "out.json"
        status, out = call("purity", "--in", "mixed:2", "--out", str(missing))
        assert status == 3
        assert str(missing.parent) in json.loads(out)["error"]["message"]

    def test_env_output_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(tmp_path))
        status, _ = call("purity", "--in", "mixed:2", "--format", "csv")
        assert status == 0
        assert (tmp_path / "purity.csv").read_text().startswith("key,value\n")


class TestExitCodes:
    @pytest.mark.parametrize("argv", [
        ("frobnicate",),
        ("purity",),
        ("purity", "--in", "mixed:2", "--mode", "fast"),
        ("capacity", "--channel", "teleport:0.1"),
        ("capacity", "--channel", "depolarizing:abc"),
        ("purity", "--in", "bogus:ref"),
    ])
    def test_parse_errors(self, argv):
        assert call(*argv)[0] == 2

    def test_malformed_file(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"dim_rows": 2, "dim_cols": 2, "entries": [[1, 0], [0, 0], [0], [0, 0]]}')
        status, out = call("purity", "--in", str(bad))
        assert status == 2
        assert "entries[2]" in json.loads(out)["error"]["message"]

    @pytest.mark.parametrize("argv", [
        ("capacity", "--channel", "depolarizing:1.5"),
        ("capacity", "--channel", "identity", "--shots", "0", "--mode", "sampled"),
        ("overlap", "--in", "mixed:2", "--in", "mixed:3"),
        ("tomo", "--in", "mixed:3", "--probes", "bloch"),
    ])
    def test_validation_errors(self, argv):
        assert call(*argv)[0] == 3

    def test_invalid_density_file(self, tmp_path):
        path = tmp_path / "neg.json"
        fileio.save_matrix(path, np.diag([1.5, -0.5]))
        assert call("purity", "--in", str(path))[0] == 3

    def test_numerical_failure(self):
        status, out = call("spectrum", "--in", "random:4:4:1", "--mode", "sampled", "--shots", "20", "--seed", "1")
        assert status == 4
        assert json.loads(out)["error"]["type"] == "SpectrumRecoveryError"

    def test_capacity_scope(self):
        assert call("capacity", "--channel", "identity", "--method", "search")[0] == 0
