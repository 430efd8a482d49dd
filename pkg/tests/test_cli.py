import csv
import io
import json
import math

import pytest

from rankone.cli import main, parse_config, parse_header
from rankone.errors import MissingRequired, TypeMismatch, UnknownKey
from rankone.model import homogeneous, two_type


def run(argv):
    buf = io.StringIO()
    code = main(argv, stdout=buf)
    return code, buf.getvalue()


def table(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


# -- parsing ----------------------------------------------------------------


def test_parse_family_descriptor():
    cfg = parse_config(["theory", "--family", "geometric", "--param", "0.7", "--psi", "identity", "--c", "0.1"])
    assert cfg.subcommand == "theory"
    assert cfg["c"] == 0.1
    sp = cfg.space()
    assert len(sp) == 23 and sp.truncation_residual < 1e-12


def test_parse_simulate_atoms():
    cfg = parse_config(
        ["simulate", "--atoms", "(1,.5,1);(2,.5,2)", "--c", "0.2", "--n", "100000", "--reps", "50", "--seed", "7"]
    )
    assert cfg.space() == two_type()
    assert cfg["n"] == [100000] and cfg["reps"] == [50] and cfg["seed"] == 7
    assert cfg["target"] == "component_size" and cfg["parallel"] == 1


def test_config_file_and_flag_override():
    text = "family = geometric, param = 0.7, psi = identity\nc = 0.1\n# a comment\n"
    cfg = parse_config(["theory", "--c", "0.05"], config_text=text)
    assert cfg["c"] == 0.05
    assert cfg["family"] == "geometric"


def test_config_file_on_disk(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("atoms = [(1, 0.5, 1), (2, 0.5, 2)]\nc = 0.2\n")
    cfg = parse_config(["theory", "--config", str(path)])
    assert cfg.space() == two_type()


@pytest.mark.parametrize(
    "argv, text, exc, key",
    [
        (["theory", "--family", "homogeneous"], "c = 0.5, colour = 3", UnknownKey, "colour"),
        (["theory", "--family", "homogeneous"], None, MissingRequired, "c"),
        (["theory", "--family", "homogeneous", "--c", "-1"], None, TypeMismatch, "c"),
        (["theory", "--family", "homogeneous", "--c", "abc"], None, TypeMismatch, "c"),
        (["simulate", "--family", "homogeneous", "--c", "0.5", "--n", "100"], None, MissingRequired, "reps"),
        (["theory", "--c", "0.5"], None, MissingRequired, "family"),
        (["theory", "--family", "geometric", "--c", "0.5"], None, MissingRequired, "param"),
        (["percolation", "--N", "10", "--p", "0.3", "--c", "0.2", "--reps", "1", "--d", "4"], None, TypeMismatch, "d"),
    ],
)
def test_config_errors_name_the_key(argv, text, exc, key):
    with pytest.raises(exc) as info:
        parse_config(argv, config_text=text)
    assert info.value.key == key
    assert key in str(info.value)


def test_header_round_trip():
    cfg = parse_config(["simulate", "--atoms", "(1,.5,1);(2,.5,2)", "--c", "0.2", "--n", "100,1000", "--reps", "5"])
    assert parse_header("# " + cfg.header()) == cfg
    again = parse_config(["simulate"], config_text=",".join(f"{k} = {v!r}" for k, v in cfg.values.items()))
    assert again == cfg


# -- subcommands ------------------------------------------------------------


def test_theory_homogeneous():
    code, out = run(["theory", "--family", "homogeneous", "--c", "0.5"])
    assert code == 0
    row = table(out)[0]
    assert float(row["r"]) == pytest.approx(1.2131, abs=1e-4)
    assert float(row["inv_log_r"]) == pytest.approx(5.177, abs=1e-3)
    assert float(row["alpha"]) == pytest.approx(float(row["r"]), rel=1e-8)
    assert row["regime"] == "subcritical"
    assert out.startswith("# config: ")


def test_theory_at_critical():
    code, out = run(["theory", "--family", "homogeneous", "--c", "1.0"])
    row = table(out)[0]
    assert code == 0 and float(row["r"]) == 1.0 and row["inv_log_r"] == "inf"


def test_twelve_significant_digits():
    _, out = run(["theory", "--family", "homogeneous", "--c", "0.5"])
    r = table(out)[0]["r"]
    assert r == f"{2 * math.exp(-0.5):.12g}"


def test_scan_rows():
    code, out = run(["scan", "--atoms", "(1,.5,1);(2,.5,2)", "--c-grid", "0.1,0.2,0.3"])
    rows = table(out)
    assert code == 0
    assert [float(r["c"]) for r in rows] == [0.1, 0.2, 0.3]
    assert list(rows[0]) == ["c", "c_cr", "y0", "r", "alpha"]
    assert float(rows[1]["r"]) == pytest.approx(1.20220, abs=1e-5)
    rs = [float(r["r"]) for r in rows]
    assert rs == sorted(rs, reverse=True)


def test_usage_error_exit_code(capsys):
    code, _ = run(["theory", "--family", "homogeneous", "--c", "-1"])
    assert code == 2
    assert "c" in capsys.readouterr().err
    assert run(["nonsense"])[0] == 2


def test_model_error_exit_code():
    assert run(["branching", "--family", "homogeneous", "--c", "0.5", "--root", "3", "--reps", "10"])[0] == 2


def test_band_failure_exit_code():
    argv = ["simulate", "--family", "homogeneous", "--c", "0.5", "--n", "200,400", "--reps", "5"]
    assert run(argv + ["--band", "100,200"])[0] == 1
    code, out = run(argv)
    assert code == 0
    assert "final_pass" not in out  # no band configured, no verdict


def test_simulate_output_is_deterministic():
    argv = ["simulate", "--atoms", "(1,.5,1);(2,.5,2)", "--c", "0.2", "--n", "300,900", "--reps", "6", "--seed", "7"]
    a, b = run(argv)[1], run(argv)[1]
    assert a == b
    rows = table(a)
    assert [int(r["n"]) for r in rows] == [300, 900]
    assert all(r["seed"] == "7" for r in rows)


@pytest.mark.parametrize("fmt", ["json", "table"])
def test_other_formats(fmt):
    argv = ["theory", "--family", "homogeneous", "--c", "0.5", "--format", fmt]
    code, out = run(argv)
    assert code == 0 and out == run(argv)[1]
    if fmt == "json":
        payload = json.loads(out)
        assert payload["config"]["c"] == 0.5
        assert payload["rows"][0]["r"] == pytest.approx(1.2131, abs=1e-4)
    else:
        assert out.splitlines()[1].split()[:2] == ["c", "c_cr"]


def test_output_file(tmp_path):
    path = tmp_path / "out.csv"
    code, out = run(["theory", "--family", "homogeneous", "--c", "0.5", "--output", str(path)])
    assert code == 0 and out == ""
    assert path.read_text().startswith("# config:")


def test_branching_outputs():
    argv = ["branching", "--family", "homogeneous", "--c", "0.5", "--root", "1", "--reps", "2000", "--seed", "3"]
    code, out = run(argv)
    rows = {r["quantity"]: r for r in table(out)}
    assert code == 0
    assert float(rows["progeny"]["closed_form"]) == 2.0
    assert abs(float(rows["progeny"]["z"])) < 4
    code, out = run(argv + ["--per-replica"])
    per = table(out)
    assert len(per) == 2000
    assert all(r["progeny"] == r["activity"] for r in per)


def test_percolation_p_zero_matches_simulate():
    reps = 120
    _, perc = run(["percolation", "--N", "999", "--p", "0", "--c", "0.5", "--reps", str(reps), "--seed", "2"])
    _, sim = run(["simulate", "--family", "homogeneous", "--c", "0.5", "--n", "1999", "--reps", str(reps), "--seed", "3",
                  "--format", "json"])
    per = table(perc)
    assert all(r["k_n"] == "1999" for r in per)
    x = [float(r["c1_over_log_box"]) for r in per]
    mean = sum(x) / reps
    se = math.sqrt(sum((v - mean) ** 2 for v in x) / (reps - 1) / reps)
    ref = json.loads(sim)["rows"][0]
    assert abs(mean - ref["mean"]) <= 4 * math.hypot(se, ref["stderr"])
    summary = json.loads(perc.splitlines()[-1][len("# summary: "):])
    assert summary["samplewise_identity"] is True
    assert summary["inv_log_gamma"] == pytest.approx(ref["predicted"], rel=1e-9)
    assert summary["threshold_c"] == 1.0


def test_homogeneous_space_roundtrip():
    cfg = parse_config(["theory", "--family", "homogeneous", "--c", "0.5"])
    assert cfg.space() == homogeneous()
