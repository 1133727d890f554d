import csv
import io
import subprocess
import sys

import pytest
from hypothesis import given, settings, strategies as st

from lowlying import __version__
from lowlying.cli import SUBCOMMANDS, RunConfig, build_parser, main

SMALL_RUNS = {
    "density": ["m=101,1009", "sigma=1"],
    "sqfree-density": ["N=100"],
    "bias": ["family=tlin", "params=1,1,1,0", "p_hi=300"],
    "table1": ["rows=1,6", "rank_lo=100", "rank_hi=140"],
    "rank-bound": ["sigma=2"],
    "symmetry": ["backing=elliptic", "family=weierstrass", "a1=0,1", "a0=1", "by=rank",
                 "p_lo=50", "p_hi=80"],
    "convolve": ["left.backing=quadratic", "right.backing=elliptic", "right.family=tconst",
                 "right.params=1,1,1,1,1", "right.t_lo=0", "right.t_hi=30", "p_hi=300"],
    "dirichlet-moment": ["q=7", "X=1000", "torsion=3"],
    "constants": ["X=1e5"],
    "oracle-check": ["m=15", "p_max=200"],
}


def run_cli(capsys, args):
    code = main(args)
    out, err = capsys.readouterr()
    return code, out, err


def parse_csv(text):
    lines = text.splitlines()
    assert lines[0].startswith(f"# lowlying {__version__} ")
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def test_every_subcommand_has_a_smoke_run():
    assert set(SMALL_RUNS) == set(SUBCOMMANDS)


@pytest.mark.parametrize("name", sorted(SMALL_RUNS))
def test_subcommand_runs_and_is_deterministic(capsys, name):
    code, out, err = run_cli(capsys, [name, *SMALL_RUNS[name]])
    assert code == 0, err
    rows = parse_csv(out)
    assert rows
    code2, out2, _ = run_cli(capsys, [name, *SMALL_RUNS[name]])
    assert out2 == out


@pytest.mark.parametrize("name", sorted(SMALL_RUNS))
def test_help_documents_every_column(capsys, name):
    _, out, _ = run_cli(capsys, [name, *SMALL_RUNS[name]])
    header = out.splitlines()[1].split(",")
    with pytest.raises(SystemExit):
        build_parser().parse_args([name, "--help"])
    help_text = capsys.readouterr().out
    for col in header:
        assert col in help_text, (name, col)
    for key in SUBCOMMANDS[name].keys:
        assert key in help_text


def test_bias_moments_columns_documented(capsys):
    _, out, _ = run_cli(capsys, ["bias", "family=tn", "params=2", "p_hi=60", "emit=moments"])
    header = out.splitlines()[1].split(",")
    assert header == ["p", "M1", "M2", "A1_num", "A1_den", "A2_num", "A2_den", "singular_count"]
    with pytest.raises(SystemExit):
        build_parser().parse_args(["bias", "--help"])
    help_text = capsys.readouterr().out
    assert all(c in help_text for c in header)


def test_threads_do_not_change_output(capsys):
    args = ["bias", "family=weierstrass", "a1=0,1", "a0=0,1", "p_hi=800"]
    _, one, _ = run_cli(capsys, args + ["--threads", "1"])
    _, two, _ = run_cli(capsys, args + ["--threads", "2"])
    assert one == two


def test_bias_tlin_example(capsys):
    code, out, _ = run_cli(capsys, ["bias", "family=tlin", "params=1,1,1,0", "p_lo=5", "p_hi=10000"])
    assert code == 0
    row = parse_csv(out)[0]
    assert float(row["stat1"]) < 0 and row["sign"] == "-1"


def test_constants_example(capsys):
    code, out, _ = run_cli(capsys, ["constants", "X=1e7"])
    row = parse_csv(out)[0]
    assert abs(float(row["C1"]) - 0.986) < 1e-3
    assert abs(float(row["C2"]) - 2.966) < 1e-2


def test_oracle_check_example(capsys):
    code, out, _ = run_cli(capsys, ["oracle-check", "m=15"])
    assert code == 0
    assert all(r["failures"] == "0" for r in parse_csv(out))


def test_unknown_key_lists_accepted(capsys):
    code, _, err = run_cli(capsys, ["constants", "Y=3"])
    assert code == 2
    assert "error kind=usage" in err and "accepted: X" in err


def test_bad_value_is_usage_error(capsys):
    code, _, err = run_cli(capsys, ["density", "sigma=abc"])
    assert code == 2 and "sigma" in err


def test_contract_error(capsys):
    code, _, err = run_cli(capsys, ["density", "m=9"])
    assert code == 3 and "error kind=contract" in err


def test_resource_guard_and_override(capsys):
    code, _, err = run_cli(capsys, ["sqfree-density", "N=50001"])
    assert code == 4 and "error kind=resource" in err


def test_config_file_out_and_env(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# demo\nsubcommand=dirichlet-moment\nq=5  # modulus\nX=50\n")
    out = tmp_path / "o.csv"
    assert main(["dirichlet-moment", "--config", str(cfg), "--out", str(out)]) == 0
    row = parse_csv(out.read_text())[0]
    assert row["M2"] == "6" and row["prime_count"] == "15"
    monkeypatch.setenv("LOWLYING_OUT_DIR", str(tmp_path / "env"))
    assert main(["dirichlet-moment", "--config", str(cfg), "X=3"]) == 0
    row = parse_csv((tmp_path / "env" / "dirichlet-moment.csv").read_text())[0]
    assert row["M2"] == "-1"
    assert capsys.readouterr().out == ""


def test_config_subcommand_mismatch(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("subcommand=constants\n")
    code, _, err = run_cli(capsys, ["density", "--config", str(cfg)])
    assert code == 2 and "subcommand" in err


keys = st.from_regex(r"[a-z][a-z0-9_.]{0,10}", fullmatch=True).filter(lambda k: k != "subcommand")
values = st.from_regex(r"[A-Za-z0-9_.,+-]{0,12}", fullmatch=True)


@given(st.sampled_from(sorted(SUBCOMMANDS)) | st.none(), st.dictionaries(keys, values, max_size=8))
@settings(max_examples=200, deadline=None)
def test_run_config_round_trip(sub, params):
    cfg = RunConfig(sub, params)
    back = RunConfig.from_text(cfg.to_text())
    assert back == cfg
    assert back.to_text() == cfg.to_text()


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "lowlying.cli", "constants", "X=1000"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.splitlines()[1] == "X,C1,C2"
