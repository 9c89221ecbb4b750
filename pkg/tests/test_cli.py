import json
import math
import subprocess
import sys

import numpy as np
import pytest
import yaml

from kernid import build_gram
from kernid.cli import format_csv, main, read_csv
from kernid.golden import ALL_MULTIPLES, NO_MULTIPLES, OCTAHEDRON


@pytest.fixture
def files(tmp_path):
    def write(name, doc, as_json=False):
        path = tmp_path / name
        path.write_text(json.dumps(doc) if as_json else yaml.safe_dump(doc))
        return str(path)
    return write


def params_doc(spec, **extra):
    d = spec.to_dict()
    d.update(extra)
    return d


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_check_all_multiples(files, capsys):
    path = files("d.yaml", {"dim": 1, "points": [1, 8, 15, 22, 29, 36]})
    code, out, _ = run(["check", path, "--p", "7"], capsys)
    assert code == 3 and "no non-multiple distance" in out
    assert "identifiability undetermined" in out


def test_check_octahedron(files, capsys):
    path = files("d.json", {"dim": 3, "points": [list(p) for p in OCTAHEDRON]}, as_json=True)
    code, out, _ = run(["check", path], capsys)
    assert code == 3 and "|X| = 3" in out


def test_check_holds_with_witness(files, capsys):
    path = files("d.yaml", {"dim": 1, "points": [0, 3, 7, 10]})
    code, out, _ = run(["--format", "json", "check", path, "--p", "7"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert doc["theorem1"]["verdict"] == "condition_holds"
    assert doc["witness"]["m"] == 1 and doc["witness"]["q"] == 3.0


def test_check_periodic_on_3d_design(files, capsys):
    path = files("d.yaml", {"dim": 3, "points": [list(p) for p in OCTAHEDRON]})
    assert run(["check", path, "--p", "2"], capsys)[0] == 4


@pytest.mark.parametrize("doc", [
    {"dim": 2, "points": [[0, 1], [2]]},
    {"dim": 2, "points": [0, 1]},
    {"points": []},
    {"dim": 1},
    {"dim": 1, "points": ["a"]},
])
def test_malformed_design(files, capsys, doc):
    code, _, err = run(["check", files("d.yaml", doc)], capsys)
    assert code == 2 and "error" in err


def test_malformed_params(files, capsys):
    d = files("d.yaml", {"dim": 1, "points": [0, 1]})
    for doc in ({"variant": "matern"}, {"variant": "rbf_periodic", "sigma": 1},
                {"variant": "two_rbf", "sigma1": 1, "ell1": 1, "sigma2": 1, "ell2": 1},
                {"variant": "rbf_periodic", "sigma": -1, "ell": 1, "tau": 1, "s": 1, "p": 1}):
        assert run(["gram", d, files("p.yaml", doc)], capsys)[0] == 2
    assert run(["gram", d, "/nonexistent.yaml"], capsys)[0] == 2


def test_gram_all_multiples_csv(files, capsys, tmp_path):
    d = files("d.yaml", {"dim": 1, "points": [1, 8, 15, 22, 29, 36]})
    p = files("p.yaml", params_doc(ALL_MULTIPLES.first))
    out = tmp_path / "g.csv"
    assert run(["gram", d, p, "--out", str(out)], capsys)[0] == 0
    assert np.array_equal(read_csv(out.read_text()), np.ones((6, 6)) + np.eye(6))


def test_gram_round_trip_bit_exact(files, capsys):
    d = files("d.yaml", {"dim": 1, "points": [0, 1, 2, 3]})
    p = files("p.yaml", params_doc(NO_MULTIPLES.first))
    code, out, _ = run(["gram", d, p], capsys)
    g = read_csv(out)
    assert code == 0
    assert np.array_equal(g, build_gram(NO_MULTIPLES.first, NO_MULTIPLES.design))
    assert np.max(np.abs(g - NO_MULTIPLES.gram)) <= 5e-7


def test_gram_single_point_with_noise(files, capsys):
    d = files("d.yaml", {"dim": 1, "points": [2.0]})
    p = files("p.yaml", {"variant": "rbf_periodic", "sigma": 1.5, "ell": 1, "tau": 0.5, "s": 1,
                         "p": 3, "noise_var": 0.25})
    code, out, _ = run(["gram", d, p, "--noise"], capsys)
    assert code == 0 and float(out.strip()) == 1.5**2 + 0.5**2 + 0.25


def test_gram_dimension_mismatch(files, capsys):
    d = files("d.yaml", {"dim": 3, "points": [list(p) for p in OCTAHEDRON]})
    p = files("p.yaml", params_doc(NO_MULTIPLES.first))
    assert run(["gram", d, p], capsys)[0] == 4


def test_two_rbf_canonicalised_with_warning(files, capsys, caplog):
    d = files("d.yaml", {"dim": 1, "points": [0, 1, 3]})
    p = files("p.yaml", {"variant": "two_rbf", "sigma1": 2, "ell1": 3, "sigma2": 1, "ell2": 1})
    q = files("q.yaml", {"variant": "two_rbf", "sigma1": 1, "ell1": 1, "sigma2": 2, "ell2": 3})
    with caplog.at_level("WARNING", logger="kernid"):
        code, a, _ = run(["gram", d, p], capsys)
    assert code == 0 and "canonical" in caplog.text
    assert a == run(["gram", d, q], capsys)[1]


def test_csv_format_shortest_round_trip():
    m = np.array([[0.1, 1 / 3], [math.pi, 1e-300]])
    text = format_csv(m)
    assert text.splitlines()[0] == "0.1,0.3333333333333333"
    assert np.array_equal(read_csv(text), m)


def test_witness_found_and_deterministic(files, capsys):
    d = files("d.yaml", {"dim": 1, "points": [0, 1, 2, 3]})
    p = files("p.yaml", params_doc(NO_MULTIPLES.first))
    code, out, _ = run(["--format", "json", "--seed", "2", "witness", d, p, "--starts", "24"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["outcome"] == "witness_found"
    assert abs(doc["params"]["tau"] - math.sqrt(3)) / math.sqrt(3) < 1e-3
    assert run(["--format", "json", "--seed", "2", "witness", d, p, "--starts", "24"], capsys)[1] == out


def test_witness_flat_direction(files, capsys):
    d = files("d.yaml", {"dim": 1, "points": [1, 8, 15, 22, 29, 36]})
    p = files("p.yaml", params_doc(ALL_MULTIPLES.first))
    code, out, _ = run(["witness", d, p, "--starts", "8"], capsys)
    assert code == 0 and "witness found" in out


def test_witness_none_on_identifiable_design(files, capsys):
    d = files("d.yaml", {"dim": 1, "points": [0, 3, 7, 10]})
    p = files("p.yaml", {"variant": "rbf_periodic", "sigma": 1, "ell": 2, "tau": 1, "s": 1, "p": 7})
    code, out, _ = run(["witness", d, p, "--starts", "16"], capsys)
    assert code == 3 and "no witness found under config" in out


def test_reproduce(capsys):
    code, out, _ = run(["reproduce"], capsys)
    assert code == 0 and out.count("PASS") == 3
    code, out, _ = run(["reproduce", "--format", "json"], capsys)
    devs = [r["max_abs_deviation"] for r in json.loads(out)["results"]]
    assert devs[0] == 0.0 and devs[1] <= 5e-7 and devs[2] <= 1e-9


def test_verify_lemmas(capsys):
    code, out, _ = run(["verify-lemmas", "--samples", "200", "--seed", "1"], capsys)
    assert code == 0 and out.count("PASS") == 7
    assert run(["verify-lemmas", "--samples", "0"], capsys)[0] == 2


def test_sample_and_fit(files, capsys, tmp_path):
    d = files("d.yaml", {"dim": 1, "points": [0, 3, 7, 10, 14, 20]})
    p = files("p.yaml", {"variant": "rbf_periodic", "sigma": 1, "ell": 3, "tau": 1, "s": 1, "p": 7,
                         "noise_var": 0.01})
    y = tmp_path / "y.csv"
    assert run(["--seed", "4", "sample", d, p, "--replicates", "30", "--out", str(y)], capsys)[0] == 0
    rows = read_csv(y.read_text())
    assert rows.shape == (30, 6)
    code, out, _ = run(["--format", "json", "fit", d, str(y), "--variant", "rbf_periodic", "--p", "7",
                        "--noise-var", "0.01", "--starts", "4", "--bound", "3"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["optima"]
    nll = [o["neg_log_marginal"] for o in doc["optima"]]
    assert nll == sorted(nll)


def test_fit_usage_errors(files, capsys, tmp_path):
    d = files("d.yaml", {"dim": 1, "points": [0, 1, 2]})
    y = tmp_path / "y.csv"
    y.write_text("0.1,0.2,0.3\n")
    assert run(["fit", d, str(y), "--variant", "rbf_periodic", "--noise-var", "0.1"], capsys)[0] == 2
    assert run(["fit", d, str(y), "--variant", "two_rbf"], capsys)[0] == 2
    y.write_text("0.1,0.2\n")
    assert run(["fit", d, str(y), "--variant", "two_rbf", "--noise-var", "0.1"], capsys)[0] == 4


def test_json_numbers_round_trip(files, capsys):
    d = files("d.yaml", {"dim": 1, "points": [0, 1, 2, 3]})
    p = files("p.yaml", params_doc(NO_MULTIPLES.first))
    code, out, _ = run(["--format", "json", "gram", d, p], capsys)
    g = np.array(json.loads(out)["gram"])
    assert code == 0 and np.array_equal(g, build_gram(NO_MULTIPLES.first, NO_MULTIPLES.design))


def test_usage_errors(capsys):
    assert run([], capsys)[0] == 2
    assert run(["nope"], capsys)[0] == 2
    assert run(["--format", "xml", "reproduce"], capsys)[0] == 2
    assert run(["--help"], capsys)[0] == 0


def test_console_script_entry():
    r = subprocess.run([sys.executable, "-m", "kernid.cli", "reproduce"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.count("PASS") == 3


def test_check_collapsed_exits_negative(files, capsys):
    path = files("d.yaml", {"dim": 1, "points": [0, 1, 2]})
    code, out, _ = run(["--format", "json", "check", path, "--p", "2"], capsys)
    doc = json.loads(out)
    assert code == 3 and doc["theorem1"]["quadruple"] == "collapsed" and not doc["witness"]["distinct"]


def test_check_second_shape_exits_negative(files, capsys):
    path = files("d.yaml", {"dim": 1, "points": [1, 4, 5]})
    code, out, _ = run(["--format", "json", "check", path, "--p", "2"], capsys)
    doc = json.loads(out)
    assert code == 3 and doc["theorem1"]["verdict"] == "condition_holds" and not doc["theorem1"]["certifies"]
