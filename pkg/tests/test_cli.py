import json
import os
import subprocess
import sys

import pytest

from conftest import data_path
from periodica import cli
from periodica.errors import PrecisionTooLow, RiemannCheckFailed


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run_cli(capsys, *argv, "--json", "-")
    return code, json.loads(out)


def test_genus_inline(capsys):
    code, out, _ = run_cli(capsys, "genus", "y^2 - x^3 + x + 1")
    assert code == 0 and out.strip() == "1"


def test_genus_from_file(capsys):
    code, out, _ = run_cli(capsys, "genus", data_path("sym3_D1.curve"))
    assert code == 0 and out.strip() == "2"


@pytest.mark.parametrize("argv,code", [
    (["genus", "y^2 - x^3 +* 1"], 2),
    (["genus", "(y - x)^2"], 2),
    (["genus", "x^2 + 1"], 2),
    (["hom", "y^2 - x^3 + x"], 2),
    (["genus", "y^2 - x^3 + x", "--prec", "20"], 2),
    (["genus", "{not json"], 2),
])
def test_input_errors(capsys, argv, code):
    got, out, err = run_cli(capsys, *argv)
    assert got == code
    assert "error [" in err


def test_report_schema(capsys):
    code, rep = run_json(capsys, "periods", "y^2 - x^3 + x + 1")
    assert code == 0
    assert rep["schema"] == "periodica/1"
    cur = rep["curves"][0]
    assert cur["genus"] == 1
    assert cur["homology"]["certificate_ok"]
    assert cur["monodromy"]["riemann_hurwitz_genus"] == 1
    assert set(cur["monodromy"]["generators"]) == {"0", "1", "2", "inf"}
    assert len(cur["periods"]["omega"]) == 1 and len(cur["periods"]["omega"][0]) == 2
    assert cur["riemann"]["min_imag_eigenvalue"] > 0


def test_reports_deterministic(capsys):
    args = ["riemann", "y^3 - x^4 + 1"]
    _, a = run_cli(capsys, *args, "--json", "-")[:2]
    _, b = run_cli(capsys, *args, "--threads", "3", "--json", "-")[:2]
    assert a == b


def test_differentials_files(capsys, tmp_path):
    code, rep = run_json(capsys, "riemann", data_path("genus6.curve"),
                         "--differentials", data_path("genus6.diffs"))
    assert code == 0 and rep["curves"][0]["genus"] == 6
    diffs = tmp_path / "e.diffs"
    diffs.write_text("1\n")
    code, rep = run_json(capsys, "hom", "y^2 - x^3 + x", "y^2 - x^3 + x",
                         "--differentials", str(diffs), "--differentials", str(diffs))
    assert code == 0 and rep["result"]["hom"]["rank"] == 2


def test_wrong_differentials_count(capsys, tmp_path):
    diffs = tmp_path / "bad.diffs"
    diffs.write_text("1\nx\n")
    code, out, err = run_cli(capsys, "periods", "y^2 - x^3 + x", "--differentials", str(diffs))
    assert code == 2
    assert "GenusMismatch" in err


def test_round_trip_identity(capsys, tmp_path):
    path = tmp_path / "p.json"
    code, _, _ = run_cli(capsys, "periods", "y^2 - (x^6 - x^5 + 1)", "--json", str(path))
    assert code == 0
    code, rep = run_json(capsys, "hom", str(path), str(path))
    assert code == 0
    mats = [b["R"] for b in rep["result"]["hom"]["basis"]]
    one = [[int(i == j) for j in range(4)] for i in range(4)]
    from periodica.abelian import hnf_equivalent
    assert hnf_equivalent(mats, mats + [one])


def test_json_file_and_skeleton(capsys, tmp_path):
    path = tmp_path / "r.json"
    code, out, _ = run_cli(capsys, "monodromy", "y^2 - x^3 + x + 1", "--json", str(path), "--dump-skeleton")
    assert code == 0 and out.strip()
    rep = json.loads(path.read_text())
    sk = rep["curves"][0]["skeleton"]
    assert {"vertices", "edges", "loops"} <= set(sk)


def test_cache_dir(capsys, tmp_path):
    cache = tmp_path / "cache"
    code, _, _ = run_cli(capsys, "genus", "y^2 - x^5 + 1", "--cache", str(cache))
    assert code == 0 and os.listdir(cache)
    code, out, _ = run_cli(capsys, "genus", "y^2 - x^5 + 1", "--cache", str(cache))
    assert code == 0 and out.strip() == "2"


def test_aut_command(capsys):
    code, rep = run_json(capsys, "aut", "x^3 + y^3 + 1")
    assert code == 0
    a = rep["result"]["aut"]
    assert a["group_order"] == 6 and a["quotient_by_minus_one_order"] == 3
    assert len(a["matrices"]) == 6


def test_endo_and_decompose(capsys):
    code, rep = run_json(capsys, "endo", data_path("bielliptic2.curve"))
    assert code == 0 and rep["result"]["endo"]["idempotent_ranks"] == [2, 2]
    code, rep = run_json(capsys, "decompose", data_path("bielliptic2.curve"))
    assert code == 0 and [f["dimension"] for f in rep["result"]["factors"]] == [1, 1]


def test_isom_command(capsys):
    code, rep = run_json(capsys, "isom", "y^2 - x^3 + x", "y^2 - x^3 - 4*x")
    assert code == 0 and rep["result"]["isom"]["count"] == 4


def _flaky_payload(monkeypatch, threshold, exc):
    seen = []
    real = cli._payload

    def payload(cfg, jobs):
        bits = jobs[0].periods().precision_bits
        seen.append(bits)
        if bits < threshold:
            raise exc(f"synthetic failure at {bits} bits")
        return real(cfg, jobs)

    monkeypatch.setattr(cli, "_payload", payload)
    return seen


def test_precision_failure_exit_code(capsys, monkeypatch):
    _flaky_payload(monkeypatch, 10 ** 6, PrecisionTooLow)
    code, out, err = run_cli(capsys, "endo", "y^2 - x^3 + x")
    assert code == 3
    assert "--prec" in err


def test_auto_prec_escalates(capsys, monkeypatch):
    seen = _flaky_payload(monkeypatch, 200, PrecisionTooLow)
    code, rep = run_json(capsys, "endo", "y^2 - x^3 + x", "--auto-prec")
    assert code == 0
    assert seen == [100, 200]
    assert rep["precision_bits"] == 200
    assert rep["escalations"][0]["error"] == "PrecisionTooLow"


def test_persistent_riemann_failure(capsys, monkeypatch):
    seen = _flaky_payload(monkeypatch, 10 ** 6, RiemannCheckFailed)
    code, rep = run_json(capsys, "endo", "y^2 - x^3 + x", "--auto-prec")
    assert code == 4
    assert seen == [100, 200, 400, 800]
    assert "--differentials" in rep["error"]["hint"]
    assert "RiemannCheckFailed" in rep["error"]["summary"]


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "periodica", "genus", "x^3 + y^3 + 1"],
                         capture_output=True, text=True, timeout=120)
    assert out.returncode == 0 and out.stdout.strip() == "1"
