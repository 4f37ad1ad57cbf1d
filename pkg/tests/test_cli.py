import io
import json
import subprocess
import sys

import pytest

from toposqt.cli import run

from conftest import SCENARIOS

SPIN = str(SCENARIOS / "spin.json")


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def ok(*argv):
    code, out, err = call(*argv)
    assert code == 0, err
    return out


def test_contexts_json_table_dot():
    js = json.loads(ok("-s", SPIN, "contexts"))
    assert [c["label"] for c in js["contexts"]][:2] == ["V", "V_{P1P2}"]
    table = ok("-s", SPIN, "contexts", "-f", "table")
    assert "V_{P3P4}" in table
    dot = ok("-s", SPIN, "-f", "dot", "contexts")
    assert dot.startswith("digraph")


def test_truth_value_example():
    js = json.loads(ok("-s", SPIN, "truth-value", "Sz_neg", "psi", "--at", "V"))
    assert js["members"] == ["V_{P2P3}", "V_{P2}", "V_{P3}"]
    assert js["route"] == "pseudo-state"


def test_truth_value_density_and_threshold():
    js = json.loads(ok("-s", SPIN, "truth-value", "Sz_13_23", "rho", "--at", "V"))
    assert js["members"] == ["V_{P2P3}", "V_{P2}", "V_{P3}"]
    js = json.loads(ok("-s", SPIN, "truth-value", "Sz_13_23", "rho1", "--at", "V", "--r", "7/10"))
    assert js["members"][0] == "V"


def test_truth_value_dot_highlights_members():
    dot = ok("-s", SPIN, "-f", "dot", "truth-value", "Sz_neg", "psi", "--at", "V")
    assert dot.count("lightblue") == 3


def test_daseinise():
    js = json.loads(ok("-s", SPIN, "daseinise", "Sz", "--at", "V_{P2P3}"))
    assert js["per_context"]["V_{P2P3}"]["diagonal"] == ["2", "0", "0", "2"]
    js = json.loads(ok("-s", SPIN, "daseinise", "Sz", "--inner", "--at", "V_{P2}"))
    assert js["per_context"]["V_{P2}"]["diagonal"] == ["-2", "0", "-2", "-2"]


def test_measure_and_prob_truth():
    js = json.loads(ok("-s", SPIN, "measure", "rho", "Sz_13_23"))
    assert js["weight"]["V"] == "1/2" and js["weight"]["V_{P2P3}"] == "1"
    js = json.loads(ok("-s", SPIN, "prob-truth", "Sz_13_23", "rho", "--root", "V,1"))
    assert js["cutoff"]["V"] == "1/2" and js["cutoff"]["V_{P2P3}"] == "1"


def test_pseudo_state_and_value_interval():
    js = json.loads(ok("-s", SPIN, "pseudo-state", "psi", "--at", "V_{P2}"))
    assert js
    js = json.loads(ok("-s", SPIN, "value-interval", "Sz", "V_{P4}:0"))
    assert js["interval"]["V_{P4}"] == ["0", "2"]


def test_ks_check_needs_no_scenario():
    js = json.loads(ok("ks-check"))
    assert js["result"] == "uncolorable" and js["certificate"]["kind"] == "parity"


def test_global_sections():
    js = json.loads(ok("-s", SPIN, "global-sections"))
    assert js["count"] == 4


def test_covariance():
    js = json.loads(ok("-s", SPIN, "covariance", "Sz_neg", "psi", "phases"))
    assert js["covariant"] is True


@pytest.mark.parametrize("argv, code", [
    (("contexts",), 2),
    (("-s", SPIN, "truth-value", "nope", "psi"), 1),
    (("-s", SPIN, "-f", "dot", "measure", "rho", "Sigma"), 2),
    (("-s", SPIN, "prob-truth", "Sz_neg", "rho", "--root", "V,0"), 1),
    (("-s", SPIN, "prob-truth", "Sz_neg", "rho", "--root", "V,abc"), 2),
    (("-s", "/no/such/file.json", "contexts"), 1),
    (("bogus",), 2),
])
def test_error_exit_codes(argv, code):
    c, out, err = call(*argv)
    assert c == code
    if code == 1:
        payload = json.loads(err)
        assert "error" in payload or "code" in payload


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "toposqt", "ks-check"], capture_output=True, text=True)
    assert r.returncode == 0 and '"uncolorable"' in r.stdout
