import csv
import json
import math

import numpy as np
import pytest

from lcx.cli import main
from lcx.density import density_to_dict, exponential, laplace, save_density
from lcx.discrete import geometric, pmf_from_probs, save_pmf


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def files(tmp_path):
    paths = {}
    for name, d in (("exp1", exponential(1)), ("lap", laplace(1.0))):
        p = tmp_path / f"{name}.json"
        save_density(d, p)
        paths[name] = str(p)
    p = tmp_path / "geo.json"
    save_pmf(geometric(0.5), p)
    paths["geo"] = str(p)
    bad = tmp_path / "bad.json"
    bad.write_text('{"knots": [0, 1]}')
    paths["bad"] = str(bad)
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    paths["broken"] = str(broken)
    paths["dir"] = tmp_path
    return paths


class TestEntropy:
    def test_exponential_infinity(self, capsys, files):
        code, out, _ = run(capsys, "entropy", "--density", files["exp1"], "--p", "inf")
        assert code == 0
        obj = json.loads(out)
        assert obj["value"] == 0.0 and obj["error_estimate"] == 0.0

    def test_unbounded_zero_order_is_null(self, capsys, files):
        _, out, _ = run(capsys, "entropy", "--density", files["lap"], "--p", "0")
        assert json.loads(out)["value"] is None

    def test_malformed(self, capsys, files):
        code, _, err = run(capsys, "entropy", "--density", files["bad"])
        assert code == 2 and "expected" in err and "log_values" in err
        code, _, err = run(capsys, "entropy", "--density", files["broken"])
        assert code == 2

    def test_missing_file(self, capsys, files):
        code, _, _ = run(capsys, "entropy", "--density", str(files["dir"] / "nope.json"))
        assert code == 2


class TestRearrange:
    @pytest.mark.parametrize("p", ["0.5", "1", "2", "inf"])
    def test_round_trip(self, capsys, files, p):
        out_path = str(files["dir"] / "r.json")
        assert run(capsys, "rearrange", "--density", files["lap"], "--out", out_path)[0] == 0
        _, direct, _ = run(capsys, "entropy", "--density", files["lap"], "--p", p)
        _, via, _ = run(capsys, "entropy", "--density", out_path, "--p", p)
        assert json.loads(via)["value"] == pytest.approx(json.loads(direct)["value"], abs=1e-8)


class TestConvolve:
    def test_gamma_fit(self, capsys, files):
        out_path = str(files["dir"] / "sum.json")
        code, out, _ = run(capsys, "convolve", "--a", files["exp1"], "--b", files["exp1"],
                           "--fit-tol", "1e-6", "--out", out_path)
        assert code == 0
        obj = json.loads(out)
        assert obj["l1_error"] <= 1e-5 and obj["n_knots"] > 2
        _, out, _ = run(capsys, "entropy", "--density", out_path, "--p", "inf")
        assert json.loads(out)["value"] == pytest.approx(1.0, abs=1e-5)


class TestVerify:
    def test_main_pair(self, capsys, files):
        code, out, _ = run(capsys, "verify", "--theorem", "main", "--density",
                           files["exp1"], files["lap"])
        assert code == 0
        obj = json.loads(out)
        assert obj["n_instances"] == 1 and obj["verdict"] == "pass"

    def test_corpus(self, capsys, tmp_path):
        path = tmp_path / "corpus.json"
        path.write_text(json.dumps([density_to_dict(exponential(1)),
                                    density_to_dict(laplace(1.0))]))
        code, out, _ = run(capsys, "verify", "--theorem", "h2", "--corpus", str(path),
                           "--no-timing")
        obj = json.loads(out)
        assert code == 0 and obj["n_instances"] == 2
        assert obj["instances"][1]["descriptor"]["source"].endswith("[1]")
        path.write_text(json.dumps({"knots": [0]}))
        assert run(capsys, "verify", "--theorem", "h2", "--corpus", str(path))[0] == 2

    def test_odd_pair_count(self, capsys, files):
        code, _, err = run(capsys, "verify", "--theorem", "main", "--density", files["exp1"])
        assert code == 2 and "pairs" in err

    def test_discrete_file(self, capsys, files):
        code, out, _ = run(capsys, "verify", "--theorem", "discrete-h2", "--density",
                           files["geo"])
        assert code == 0 and json.loads(out)["instances"][0]["details"]["ratio"] == \
            pytest.approx(1.8)

    def test_random_reproducible(self, capsys):
        argv = ["verify", "--theorem", "h2", "--random", "5", "--seed", "42", "--no-timing"]
        code_a, a, _ = run(capsys, *argv)
        code_b, b, _ = run(capsys, *argv)
        assert code_a == code_b == 0 and a == b
        assert json.loads(a)["wall_clock"] is None

    def test_violation_exit_code(self, capsys, tmp_path):
        g = geometric(0.9)
        p = tmp_path / "two_sided.json"
        probs = np.concatenate([g.probs[:0:-1], g.probs])
        save_pmf(pmf_from_probs(probs, -(len(g.probs) - 1)), p)
        code, out, _ = run(capsys, "verify", "--theorem", "discrete-sym", "--density", str(p))
        assert code == 1 and json.loads(out)["verdict"] == "violated"

    def test_unknown_theorem(self, capsys):
        with pytest.raises(SystemExit):
            main(["verify", "--theorem", "nope", "--random", "1"])


class TestSearch:
    def test_search_and_trace(self, capsys, tmp_path):
        trace = tmp_path / "trace.csv"
        code, out, _ = run(capsys, "search", "--p", "2", "--knots", "4", "--restarts", "2",
                           "--max-iter", "2", "--out", str(trace))
        assert code == 0
        obj = json.loads(out)
        assert obj["best_delta"] <= math.log(2) + 1e-6 + obj["budget"]
        with open(trace) as fh:
            rows = list(csv.DictReader(fh))
        assert list(rows[0]) == ["restart", "iteration", "delta"]

    def test_curve(self, capsys, tmp_path):
        path = tmp_path / "curve.csv"
        code, out, _ = run(capsys, "curve", "--p-grid", "2,inf", "--out", str(path),
                           "--knots", "4", "--restarts", "1", "--max-iter", "1")
        assert code == 0 and len(json.loads(out)["rows"]) == 2
        with open(path) as fh:
            header = fh.readline().strip().split(",")
        assert header == ["p", "best_delta", "exp_candidate_delta", "unif_candidate_delta",
                          "classification", "budget"]
