import csv
import json
import math

import pytest

from lavrentiev.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, RunConfig, main


def run(tmp_path, *argv, config=None, name="out"):
    out = tmp_path / name
    args = list(argv) + ["--out", str(out)]
    if config is not None:
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(config))
        args += ["--config", str(path)]
    return main(args), out


def read_csv(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    header = [ln for ln in lines if ln.startswith("#")]
    rows = list(csv.reader(ln for ln in lines if not ln.startswith("#")))
    return header, rows


SMALL_GAP = {"corpus_size": 40, "case1_grid": 60, "case2_grid": 500}


# ------------------------------------------------------------ config

def test_config_hash_canonicalizes_epsilon():
    assert RunConfig(epsilon="0.1").hash == RunConfig(epsilon="1/10").hash


def test_config_hash_ignores_output_directory():
    a, b = RunConfig(out="x"), RunConfig(out="y")
    assert a.hash == b.hash
    assert RunConfig(seed=1).hash != a.hash


def test_unknown_config_field_rejected(tmp_path):
    code, _ = run(tmp_path, "gap", config={"no_such_field": 1})
    assert code == EXIT_CONFIG


def test_nonpositive_epsilon_rejected(tmp_path):
    assert run(tmp_path, "smooth", "--epsilon", "0")[0] == EXIT_CONFIG
    assert run(tmp_path, "smooth", "--epsilon=-1/10")[0] == EXIT_CONFIG


def test_bad_n_list_rejected(tmp_path):
    assert run(tmp_path, "gap", config={"n_list": [64, 0]})[0] == EXIT_CONFIG


# ------------------------------------------------------------ gap

def test_gap_default_config(tmp_path):
    code, out = run(tmp_path, "gap")
    assert code == EXIT_OK
    header, rows = read_csv(out / "gap.csv")
    assert header[0].startswith("# config_sha256=") and header[1] == "# command=gap"
    assert rows[0] == ["n", "log_energy"]
    energies = [float(r[1]) for r in rows[1:]]
    assert [int(r[0]) for r in rows[1:]] == [64, 96, 128, 200]
    assert all(a > b for a, b in zip(energies, energies[1:]))
    _, corpus = read_csv(out / "corpus.csv")
    assert len(corpus) == 1001 and min(float(r[1]) for r in corpus[1:]) >= 1
    sweeps = json.loads((out / "sweeps.json").read_text())
    assert sweeps["header"]["config_sha256"] == header[0].split("=")[1]
    assert all(v["worst_margin"] >= 0 for v in sweeps["case_sweeps"].values())
    assert sweeps["case_sweeps"]["case1_slope"]["constant"] == 3 / 16


def test_gap_with_trivial_f_fails_corpus_check(tmp_path):
    code, out = run(tmp_path, "gap", config={**SMALL_GAP, "c": 0.0})
    assert code == EXIT_FAIL
    _, corpus = read_csv(out / "corpus.csv")
    assert min(float(r[1]) for r in corpus[1:]) < 1


def test_gap_empty_n_list_writes_header_only(tmp_path):
    code, out = run(tmp_path, "gap", config={**SMALL_GAP, "n_list": []})
    assert code == EXIT_OK
    header, rows = read_csv(out / "gap.csv")
    assert len(header) == 2 and rows == [["n", "log_energy"]]


def test_gap_reruns_are_byte_identical(tmp_path):
    _, a = run(tmp_path, "gap", config=SMALL_GAP, name="a")
    _, b = run(tmp_path, "gap", config=SMALL_GAP, name="b")
    for f in ("gap.csv", "corpus.csv", "crossings.csv", "sweeps.json"):
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_gap_seed_changes_corpus(tmp_path):
    _, a = run(tmp_path, "gap", config=SMALL_GAP, name="a")
    _, b = run(tmp_path, "gap", "--seed", "7", config=SMALL_GAP, name="b")
    assert (a / "corpus.csv").read_bytes() != (b / "corpus.csv").read_bytes()


# ------------------------------------------------------------ conditions

def test_conditions_default_pass(tmp_path):
    code, out = run(tmp_path, "conditions")
    assert code == EXIT_OK
    doc = json.loads((out / "conditions.json").read_text())
    assert "header" in doc


@pytest.mark.parametrize("c, failing", [(0.0, "II"), (-1.0, "I")])
def test_conditions_fail_with_witness(tmp_path, c, failing):
    code, out = run(tmp_path, "conditions", config={"c": c})
    assert code == EXIT_FAIL
    text = (out / "conditions.json").read_text()
    doc = json.loads(text)
    header, rows = read_csv(out / "conditions.csv")
    by_name = {r[0]: r for r in rows[1:]}
    assert by_name[failing][1] == "fail" and by_name[failing][3] != ""
    assert float(by_name[failing][2]) < 0
    assert doc["header"]["config"]["c"] == c


# ------------------------------------------------------------ smooth

def test_smooth_sqrt_bounded_spec(tmp_path):
    code, out = run(tmp_path, "smooth", "--epsilon", "0.05")
    assert code == EXIT_OK
    cert = json.loads((out / "certificate.json").read_text())["certificate"]
    assert cert["passed"] and cert["sup_distance"] < 0.05
    header, rows = read_csv(out / "curves.csv")
    assert rows[0] == ["x", "u", "u_prime", "u_k", "u_k_prime", "u_kn", "u_kn_prime", "phi", "phi_prime"]
    assert len(rows) == 1002
    phi = [float(r[7]) for r in rows[1:]]
    assert abs(phi[0]) < 1e-10 and abs(phi[-1] - 1) < 1e-10


def test_smooth_line_first_step(tmp_path):
    code, out = run(tmp_path, "smooth", "--epsilon", "0.01", config={"u": "line(0,1)"})
    assert code == EXIT_OK
    cert = json.loads((out / "certificate.json").read_text())["certificate"]
    assert cert["k_used"] == 2


def test_smooth_reruns_are_byte_identical(tmp_path):
    _, a = run(tmp_path, "smooth", "--epsilon", "1/10", name="a")
    _, b = run(tmp_path, "smooth", "--epsilon", "0.1", name="b")
    for f in ("certificate.json", "curves.csv"):
        assert (a / f).read_bytes() == (b / f).read_bytes()


# ------------------------------------------------------------ partition

def test_partition_counterexample_exact(tmp_path):
    code, out = run(tmp_path, "partition", "--epsilon", "1/10")
    assert code == EXIT_OK
    doc = json.loads((out / "partition.json").read_text())
    ce = doc["counterexample"]
    assert ce["min_separating_size"] == 6 and ce["measure_ok"]
    assert ce["expected_measure"] == "441/640"  # (7/10)(1 - 1/64)
    assert ce["set"]["measure"]["exact"] == "441/640"
    assert doc["level_set_partition"]["report"]["passed"]


def test_partition_float_mode(tmp_path):
    code, out = run(tmp_path, "partition", "--mode", "float", "--epsilon", "0.1")
    assert code == EXIT_OK
    doc = json.loads((out / "partition.json").read_text())
    assert math.isclose(doc["counterexample"]["set"]["measure"]["float"], 441 / 640, abs_tol=1e-12)


def test_partition_rejects_large_epsilon(tmp_path):
    assert run(tmp_path, "partition", "--epsilon", "0.3")[0] == EXIT_CONFIG


def test_partition_constant_demo_single_interval(tmp_path):
    code, out = run(tmp_path, "partition", config={"demo": "constant"})
    assert code == EXIT_OK
    doc = json.loads((out / "partition.json").read_text())
    assert doc["level_set_partition"]["partition"]["count"] == 1


def test_partition_reruns_are_byte_identical(tmp_path):
    _, a = run(tmp_path, "partition", name="a")
    _, b = run(tmp_path, "partition", name="b")
    assert (a / "partition.json").read_bytes() == (b / "partition.json").read_bytes()
