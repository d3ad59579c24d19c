import subprocess
import sys

import pytest

from slitspace.cli import main, parse_config, ConfigError


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_residual_column_matches_product(capsys):
    code, out, _ = run(["residual", "--set", "r=1/2", "--set", "level=2", "--set", "eps=1/2^2", "--set", "h=1/2^8"], capsys)
    assert code == 0
    rows = [l.split(",") for l in out.splitlines() if not l.startswith("#")][1:]
    assert [r[2] for r in rows] == ["15/2^4", "225/2^8", "3375/2^12"]


def test_modulus_unslit_square(capsys):
    code, out, _ = run(["modulus", "--set", "h=1/2^8"], capsys)
    assert code == 0
    row = out.splitlines()[-1].split(",")
    assert abs(float(row[5]) - 1) <= 0.03


def test_fibers_four_y_rows(capsys):
    code, out, _ = run(["fibers", "--set", "menger=0", "--set", "level=0", "--set", "h=1/2^5"], capsys)
    assert code == 0
    y = [l for l in out.splitlines() if l.endswith(",Y(1),3")]
    assert len(y) == 4


def test_byte_identical_with_seed(tmp_path, capsys):
    cfg = tmp_path / "a.cfg"
    cfg.write_text("# carpet\nr = 1/2^1\nlevel = 1\nh = 1/2^5\nsamples = 40\nradii = 1/2^2, 1/2^3\n")
    outs = []
    for i in range(2):
        path = tmp_path / f"o{i}.csv"
        assert main(["ahlfors", "--config", str(cfg), "--seed", "7", "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert b"# seed = 7" in outs[0]


def test_threads_do_not_change_output(capsys):
    args = ["collar", "--set", "r=1/2", "--set", "level=1", "--set", "h=1/2^6", "--set", "eps=1/2^2, 1/2^3"]
    _, a, _ = run(args, capsys)
    _, b, _ = run(args + ["--threads", "2"], capsys)
    assert a == b and "yes,yes" in a


def test_config_errors_are_line_anchored(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("h = 1/2^4\n\nlevel = x\n")
    code, _, err = run(["modulus", "--config", str(cfg)], capsys)
    assert code == 2 and f"{cfg}:3" in err
    with pytest.raises(ConfigError, match="config:1"):
        parse_config("nonsense")


@pytest.mark.parametrize("bad", [["--set", "h=1/3"], ["--set", "h=1/2^4", "--set", "eps=1/3"], ["--set", "command=k5", "--set", "h=1/2^4"]])
def test_validation_errors(bad, capsys):
    code, _, err = run(["modulus"] + bad, capsys)
    assert code == 2 and "error" in err


def test_cell_cap(capsys):
    code, _, err = run(["modulus", "--set", "h=1/2^8", "--max-cells", "100"], capsys)
    assert code == 2


def test_slits_and_k5(tmp_path, capsys):
    save = tmp_path / "s.json"
    code, out, _ = run(["slits", "--set", "r=1/2", "--set", "level=1", "--set", f"save={save}"], capsys)
    assert code == 0 and save.exists() and "sigma" in out
    code, out, _ = run(["modulus", "--set", f"slits_file={save}", "--set", "level=1", "--set", "h=1/2^5"], capsys)
    assert code == 0
    code, out, _ = run(["k5", "--set", "menger=0,1", "--set", "level=1", "--set", "h=1/2^4"], capsys)
    assert code == 0 and len(out.strip().splitlines()[-10:]) == 10


def test_report_exit_code(capsys):
    code, out, err = run(["report", "--set", "criteria=6"], capsys)
    assert code == 0 and "[PASS] criterion  6" in err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "slitspace", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "residual" in res.stdout
