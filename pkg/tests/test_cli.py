import io
import json
import subprocess
import sys

import pytest

from ellint import cli
from ellint.registry import REGISTRY


def run(*argv):
    out = io.StringIO()
    code = cli.main(list(argv), out)
    return code, [json.loads(line) for line in out.getvalue().splitlines() if line.startswith("{")]


class TestExitCodes:
    def test_pass(self):
        code, reps = run("verify", "theta3", "--n", "2", "--samples", "3")
        assert code == 0 and len(reps) == 3 and all(r["pass"] for r in reps)

    def test_fail(self):
        code, reps = run("verify", "theta1", "--tol", "1e-30")
        assert code == 1 and not reps[0]["pass"]

    @pytest.mark.parametrize("argv", [
        [], ["verify"], ["verify", "nope"], ["verify", "univariate", "--n", "2"],
        ["verify", "univariate", "--grid", "7"], ["verify", "univariate", "--grid", "64,128"],
        ["sweep", "univariate", "--grid", "64"], ["sweep", "ros", "--grid", "8,16"],
        ["verify", "ros", "--n", "2", "--N", "1"], ["verify", "theta1", "--samples", "0"],
        ["verify", "theta1", "--tol", "-1"], ["verify", "theta1", "--bogus"],
        ["verify", "an", "--n", "3", "--grid", "4096"],
    ])
    def test_usage(self, argv, capsys):
        assert cli.main(argv, io.StringIO()) == 2
        assert "ellint: error" in capsys.readouterr().err

    def test_conjecture_does_not_fail(self):
        code, reps = run("verify", "pair_ca", "--n", "1", "--tol", "1e-30")
        assert code == 0
        assert reps[0]["conjecture_flag"] and not reps[0]["pass"]

    def test_error_becomes_report(self, capsys):
        # a modulus cap below the M cap cannot be sampled
        code, reps = run("verify", "univariate", "--modulus-cap", "0.2", "--m-cap", "0.3")
        assert code == 1
        assert reps[0]["error"]["type"] == "DomainError" and reps[0]["lhs"] is None
        assert "DomainError" in capsys.readouterr().err


class TestOutput:
    def test_list(self):
        out = io.StringIO()
        assert cli.main(["--list"], out) == 0
        lines = out.getvalue().splitlines()
        assert len(lines) == len(REGISTRY)
        assert any(line.startswith("univariate") and "tol=1e-09" in line for line in lines)

    def test_schema(self):
        code, (schema,) = run("--schema")
        assert code == 0 and schema["schema_version"] == "1.0"
        assert {"lhs", "rhs", "rel_err", "pass", "conjecture_flag", "elapsed_ms"} <= set(schema["fields"])

    def test_record_fields(self):
        _, (rep,) = run("verify", "univariate", "--grid", "128", "--seed", "4")
        schema = cli.SCHEMA["fields"]
        assert set(rep) == set(schema)
        assert rep["grid"] == {"n": 1, "N": 128}
        assert rep["elapsed_ms"] == 0
        # decimal strings round-trip
        assert float(rep["rel_err"]) == abs(complex(*map(float, rep["lhs"])) - complex(*map(float, rep["rhs"]))) \
            / abs(complex(*map(float, rep["rhs"])))

    def test_deterministic(self):
        a = run("verify", "eb", "--n", "2", "--N", "2,1", "--seed", "9", "--samples", "2")
        b = run("verify", "eb", "--n", "2", "--N", "2,1", "--seed", "9", "--samples", "2")
        assert a == b

    def test_timing(self):
        _, (rep,) = run("verify", "theta2", "--n", "3", "--timing")
        assert isinstance(rep["elapsed_ms"], int) and rep["elapsed_ms"] >= 0

    def test_jobs_preserve_order(self):
        _, serial = run("verify", "theta1", "--n", "2", "--samples", "4")
        _, parallel = run("verify", "theta1", "--n", "2", "--samples", "4", "--jobs", "2")
        assert serial == parallel
        assert [r["sample"] for r in parallel] == [0, 1, 2, 3]

    def test_positional_and_flag_identity(self):
        assert run("verify", "theta1") == run("verify", "--identity", "theta1")


class TestSweep:
    def test_convergence_record(self):
        code, recs = run("sweep", "univariate", "--grid", "16,32,64", "--seed", "3")
        conv = recs[-1]
        assert code == 0 and conv["kind"] == "convergence" and conv["pass"]
        assert conv["N"] == [16, 32, 64] and len(conv["rel_err"]) == 3 and len(conv["ratio"]) == 2
        assert [r["grid"]["N"] for r in recs[:-1]] == [16, 32, 64]

    def test_samples(self):
        _, recs = run("sweep", "new_an", "--grid", "32,64", "--samples", "2")
        assert [r.get("kind") for r in recs].count("convergence") == 2

    @pytest.mark.parametrize("errors,ok", [
        ([1e-3, 1e-6, 1e-9], True), ([1e-3, 1e-2], False), ([1e-8, 1e-14, 3e-14], True),
        ([1e-8, None], False), ([1e-5, 1e-5], False),
    ])
    def test_convergence_rule(self, errors, ok):
        assert cli.convergence_ok(errors) is ok


class TestConfig:
    def write(self, tmp_path, text):
        path = tmp_path / "run.cfg"
        path.write_text(text)
        return str(path)

    def test_config_values(self, tmp_path):
        cfg = self.write(tmp_path, "# run\nidentity = ros\nn = 2\nN = 1,1\nseed = 5\nsamples = 2  # two\n")
        code, reps = run("verify", "--config", cfg)
        assert code == 0 and [r["seed"] for r in reps] == [5, 6]
        assert reps[0]["grid"] == {"lambda_box": [1, 1]}

    def test_flags_override_config(self, tmp_path):
        cfg = self.write(tmp_path, "identity = theta1\nseed = 5\ntol = 1e-30\n")
        _, reps = run("verify", "--config", cfg, "--seed", "8", "--tol", "1e-9")
        assert reps[0]["seed"] == 8 and reps[0]["threshold"] == "1e-09"

    def test_defaults_under_config(self, tmp_path):
        cfg = self.write(tmp_path, "identity = theta1\n")
        _, reps = run("verify", "--config", cfg)
        assert reps[0]["seed"] == 0 and reps[0]["threshold"] == "1e-10"

    def test_dashed_keys_and_timing(self, tmp_path):
        cfg = self.write(tmp_path, "identity = univariate\nm-cap = 0.2\ntiming = yes\n")
        _, (rep,) = run("verify", "--config", cfg)
        assert rep["pass"]
        p, q = (complex(*map(float, rep["params"][k])) for k in "pq")
        assert max(abs(p), abs(q)) <= 0.2

    @pytest.mark.parametrize("text", ["colour = red\n", "identity theta1\n", "identity = theta1\nseed = x\n"])
    def test_bad_config(self, tmp_path, text):
        assert cli.main(["verify", "--config", self.write(tmp_path, text)], io.StringIO()) == 2

    def test_missing_config(self, tmp_path):
        assert cli.main(["verify", "--config", str(tmp_path / "none")], io.StringIO()) == 2


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ellint.cli", "verify", "theta2", "--n", "2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["pass"]


class TestDocumentedRuns:
    def test_new_an(self):
        assert run("verify", "new_an", "--n", "1", "--seed", "42", "--grid", "256", "--tol", "1e-9")[0] == 0

    def test_ros(self):
        assert run("verify", "ros", "--n", "3", "--N", "2,1,2", "--seed", "7")[0] == 0

    def test_new_an_rank_two_drop(self):
        _, recs = run("sweep", "new_an", "--n", "2", "--grid", "48,96", "--samples", "2")
        for conv in (r for r in recs if r.get("kind") == "convergence"):
            first, second = map(float, conv["rel_err"])
            assert second < first / 1e3

    def test_inversion_monotone(self):
        code, recs = run("sweep", "inversion_n1", "--grid", "64,128,256", "--samples", "3")
        assert code == 0 and all(r["pass"] for r in recs if r.get("kind") == "convergence")
