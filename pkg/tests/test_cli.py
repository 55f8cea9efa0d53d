import io
import json

import pytest

from gasketgrad import cli
from gasketgrad.harmonic_algebra import ConsistencyError


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def doc(*argv):
    code, out, err = call(*argv)
    assert code == 0, err
    return json.loads(out)


def test_matrices_fractions():
    d = doc("matrices", "--n", "3")
    assert d["full"][0]["fraction"] == [["1", "0", "0"], ["2/5", "2/5", "1/5"], ["2/5", "1/5", "2/5"]]


def test_beta_values():
    d = doc("beta", "--n", "3")
    assert d["beta_norm"] == pytest.approx(0.789202, abs=1e-6)
    assert d["beta_rho"] == pytest.approx(0.767592, abs=1e-6)


def test_eigencheck():
    assert doc("eigencheck", "--n", "5")["ok"] is True


def test_bound_subcommand():
    d = doc("bound", "--n", "4", "--word", "rand:3", "--levels", "10")
    assert d["ok"] is True and len(d["levels"]) == 10


def test_graph_counts():
    d = doc("graph", "--n", "3", "--m", "2")
    assert len(d["vertices"]) == 15


def test_solve_and_gradient():
    d = doc("solve", "--n", "3", "--m", "4", "--weights", "uneven")
    assert d["residual"] < 1e-9
    g = doc("gradient", "trace", "--n", "3", "--m", "6", "--boundary", "1,0,0", "--rhs", "f:const:0")
    assert g["estimate"] == pytest.approx([1.0, 0.0], abs=1e-9)


def test_criteria():
    assert doc("criterion", "sg3-measure", "--weights", "uniform")["verdict"] == "FAIL"
    assert doc("criterion", "sg3-measure", "--weights", "uneven")["verdict"] == "PASS"
    assert doc("criterion", "cor51", "--n", "4")["verdict"] == "FAIL"
    assert doc("criterion", "thm1", "--word", "w:" + "0" * 20)["verdict"] == "inconclusive"
    assert doc("criterion", "thm2", "--levels", "300")["verdict"] == "PASS-evidence"


def test_montecarlo_seed_required():
    code, _, err = call("montecarlo", "blocks", "--n", "3")
    assert code == 1 and "--seed" in err
    code, _, _ = call("montecarlo", "failures", "--n", "3")
    assert code == 1


def test_montecarlo_csv():
    code, out, _ = call("montecarlo", "failures", "--seed", "1", "--samples", "500",
                        "--levels", "50,100", "--format", "csv")
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "n,fraction,ci_low,ci_high,chernoff_bound"
    assert len(lines) == 3
    code, out, _ = call("montecarlo", "chernoff", "--levels", "300", "--format", "csv")
    assert out.splitlines()[1].startswith("300,148,")


def test_determinism():
    argv = ["montecarlo", "blocks", "--n", "4", "--samples", "20000", "--seed", "9"]
    assert call(*argv)[1] == call(*argv)[1]
    argv = ["criterion", "thm2", "--word", "rand:4", "--levels", "500"]
    assert call(*argv)[1] == call(*argv)[1]


def test_float_precision():
    _, out, _ = call("beta", "--n", "3")
    assert '"beta_norm": 0.78920151457477,' in out


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    ["beta", "--bogus"],
    ["beta", "--n", "11"],
    ["criterion", "sg3-measure", "--n", "4"],
    ["criterion", "cor51", "--weights", "{not json"],
    ["solve", "--m", "3", "--weights", "uniform"],
    ["graph", "--n", "3", "--m", "40"],
])
def test_usage_and_validation_errors(argv):
    code, out, err = call(*argv)
    assert code == 1
    assert out == ""
    assert err


def test_consistency_failure_exit_code(monkeypatch):
    def broken(*a, **k):
        raise ConsistencyError("injected")

    monkeypatch.setattr(cli, "beta", broken)
    code, _, err = call("beta", "--n", "3")
    assert code == 2 and "injected" in err


def test_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nn = 4\nformat=csv\n")
    code, out, _ = call("beta", "--config", str(cfg))
    assert code == 0 and out.splitlines()[1].startswith("4,")
    code, out, _ = call("beta", "--config", str(cfg), "--n", "3", "--format", "json")
    assert json.loads(out)["N"] == 3
    cfg.write_text("colour=blue\n")
    assert call("beta", "--config", str(cfg))[0] == 1
