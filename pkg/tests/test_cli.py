import json
import subprocess
import sys
from io import StringIO

import pytest

from telesum.cli import main, split_top_level

WEIGHTED = "Sum(k,0,a,k*X[k]*Sum(j,0,k,X[j]))"


def run(*argv):
    out = StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def test_reduce_plain():
    code, text = run("reduce", "Sum(k,0,a,Sum(j,0,k,X[j]))", "--simple-sums")
    assert code == 0
    assert "(a+1)*Sum(i,0,a,X[i]) - Sum(i,0,a,i*X[i])" in text


def test_reduce_reports_constraint():
    code, text = run("reduce", WEIGHTED, "--extract-constraints", "1")
    assert code == 0
    assert "Y[a+1] - Y[a] =" in text


def test_reduce_latex():
    code, text = run("reduce", "Sum(k,0,a,Sum(j,0,k,X[j]))", "--format", "latex")
    assert code == 0 and r"\sum_{" in text


def test_reduce_gave_up_is_not_an_error():
    code, text = run("--format", "json", "reduce", WEIGHTED, "--extract-constraints", "0")
    assert code == 0
    assert json.loads(text)["case"] == "gave-up"


def test_json_pipeline_roundtrip(tmp_path):
    code, text = run("reduce", WEIGHTED, "--format", "json")
    assert code == 0
    path = tmp_path / "r.json"
    path.write_text(text, encoding="utf-8")
    code, text = run("specialize", str(path), "--atom", "binom(n,k)", "--format", "json")
    assert code == 0
    data = json.loads(text)
    assert data["constants"] == {"c": "1/4*n"}
    code, text = run("verify", json.dumps(data), "--grid", "6,6")
    assert code == 0 and "pass" in text


def test_specialize_inline_expression():
    code, text = run("specialize", WEIGHTED, "--atom", "harmonic(k)")
    assert code == 0
    assert "c = 0" in text


def test_specialize_failure_exit_code():
    code, text = run("specialize", "Sum(k,0,a,(-1)^k*Sum(j,0,k,X[j])^2)", "--atom", "(-1)^k*binom(n,k)")
    assert code == 1 and text.startswith("no solution")


def test_telescope_pieces():
    code, text = run("telescope", "--pieces", "(k+1)*binom(n,k+1), -2*binom(n,k+1)")
    assert code == 0
    assert text.splitlines()[0] == "c = 1/4*n"


def test_telescope_no_solution():
    code, text = run("telescope", "--pieces", "1/(k+1)")
    assert code == 1 and "no solution" in text


def test_verify_corpus_entry():
    code, text = run("verify", "corpus:C2Vn", "--grid", "8,8")
    assert code == 0
    assert "pass: 45 points" in text


def test_verify_false_identity():
    code, text = run("verify", "Sum(k,0,a,X[k]) = a", "--grid", "4,4")
    assert code == 1 and "fail" in text


def test_corpus_command_filter():
    code, text = run("corpus", "--filter", "C1", "--grid", "5,5")
    assert code == 0
    assert [line.split()[0] for line in text.splitlines()] == ["C1.partial", "C1.full"]


def test_unsupported_input_exit_code():
    code, _ = run("reduce", "Sum(k,0,a,Sum(j,0,k,X[j])^3)")
    assert code == 2


def test_parse_error_exit_code():
    code, _ = run("reduce", "Sum(k,0,a")
    assert code == 3


def test_unknown_corpus_entry_is_a_usage_error():
    code, _ = run("verify", "corpus:Missing")
    assert code == 3


def test_bad_flag_exits_with_usage_code():
    with pytest.raises(SystemExit) as exc:
        main(["reduce", "--bogus"])
    assert exc.value.code == 3


def test_split_top_level():
    assert split_top_level("binom(n,k), x^k*f(a,b),3") == ["binom(n,k)", "x^k*f(a,b)", "3"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "telesum", "telescope", "--pieces", "1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "g = k" in proc.stdout
