import csv
import io
import math
import subprocess
import sys

import pytest

from fadeasym import __version__
from fadeasym.cli import CliError, main, split_branches
from fadeasym.numerics import loglog_slope


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def parse_csv(text):
    body = [line for line in text.splitlines() if not line.startswith("#")]
    rows = list(csv.DictReader(io.StringIO("\n".join(body))))
    meta = [line[2:] for line in text.splitlines() if line.startswith("# ")]
    return rows, meta


def test_asymptote_rayleigh_dpsk(capsys):
    code, out, _ = run(["asymptote", "--channel", "rayleigh", "--mod", "dpsk", "--snr", "0:40:2"], capsys)
    assert code == 0
    rows, meta = parse_csv(out)
    assert len(rows) == 21
    assert float(rows[-1]["value"]) == pytest.approx(5e-5, rel=1e-3)
    assert {r["method"] for r in rows} == {"asymptote"}
    assert all(r["ci_halfwidth"] == "" for r in rows)
    assert f"fadeasym {__version__}" in meta
    assert any(m.startswith("C1 = ") for m in meta) and any(m.startswith("A = ") for m in meta)


def test_asymptote_lognormal_error(capsys):
    code, out, err = run(["asymptote", "--channel", "lognormal:sigma_db=8", "--mod", "dpsk"], capsys)
    assert code != 0
    assert "rapidly varying" in err
    assert len(err.strip().splitlines()) == 1
    assert out == ""


def test_asymptote_mqam_slope(capsys):
    code, out, _ = run(["asymptote", "--channel", "nakagami:m=2", "--mod", "mqam:M=16", "--snr", "30:60:5"], capsys)
    rows, _ = parse_csv(out)
    pts = [(10 ** (float(r["snr_db"]) / 10), float(r["value"])) for r in rows]
    assert loglog_slope(pts).slope == pytest.approx(-2.0, abs=1e-3)


@pytest.mark.parametrize(
    "argv",
    [
        ["asymptote", "--channel", "foo", "--mod", "dpsk"],
        ["asymptote", "--channel", "rayleigh", "--mod", "mqam:M=3"],
        ["asymptote", "--channel", "rayleigh", "--mod", "dpsk", "--snr", "10:0:1"],
        ["combine", "--scheme", "mrc", "--branches", "rayleigh,lognormal:sigma_db=6", "--mod", "bpsk"],
        ["combine", "--scheme", "mrc", "--branches", "m=2,rayleigh", "--mod", "bpsk"],
        ["tauberian", "--channel", "lognormal:sigma_db=6"],
    ],
)
def test_invalid_input_exits_nonzero(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2
    assert err.startswith("fadeasym ") and len(err.strip().splitlines()) == 1


def test_argparse_errors_exit_nonzero(capsys):
    with pytest.raises(SystemExit) as info:
        main(["figure", "7"])
    assert info.value.code != 0


def test_exact_matches_closed_form(capsys):
    code, out, _ = run(["exact", "--channel", "nakagami:m=2", "--mod", "dpsk", "--snr", "20:20:1"], capsys)
    rows, _ = parse_csv(out)
    assert float(rows[0]["value"]) == pytest.approx(0.5 / 51**2, rel=1e-9)
    assert rows[0]["method"] == "exact"


def test_mc_rows_and_determinism(capsys):
    argv = ["--seed", "3", "mc", "--channel", "rayleigh", "--mod", "dpsk", "--snr", "20:20:1", "--draws", "100000"]
    _, out1, _ = run(argv, capsys)
    _, out2, _ = run(argv + ["--workers", "4"], capsys)
    assert out1 == out2
    rows, meta = parse_csv(out1)
    assert rows[0]["method"] == "montecarlo"
    hw = float(rows[0]["ci_halfwidth"])
    assert abs(float(rows[0]["value"]) - 0.5 / 101) <= hw
    assert "seed = 3" in meta


def test_exponent_report(capsys):
    _, out, _ = run(["exponent", "--channel", "gk:m=2,k=1"], capsys)
    d_hat = float(out.split("d_hat = ")[1].split()[0])
    assert d_hat == pytest.approx(1.0, abs=0.01)
    assert "PASS" in out
    _, out, _ = run(["exponent", "--channel", "weibull:k=0.5"], capsys)
    assert float(out.split("d_hat = ")[1].split()[0]) == pytest.approx(0.5, abs=0.01)
    code, out, _ = run(["exponent", "--channel", "lognormal:sigma_db=6"], capsys)
    assert code == 0 and "rapidly varying (d=inf)" in out


def test_tauberian_command(capsys):
    code, out, _ = run(["tauberian", "--channel", "nakagami:m=2"], capsys)
    assert code == 0 and out.rstrip().endswith("PASS")


def _offset_values(out):
    off = float(out.split("asymptotic offset = ")[1].split()[0])
    gap = float(out.split("exact crossing gap at 1e-06 = ")[1].split()[0])
    return off, gap


def test_offset_rayleigh(capsys):
    _, out, _ = run(["offset", "--channel", "rayleigh", "--mod1", "dpsk", "--mod2", "bpsk"], capsys)
    off, gap = _offset_values(out)
    assert off == pytest.approx(3.0103, abs=1e-4)
    assert gap == pytest.approx(off, abs=0.02)


def test_offset_identical_and_nakagami(capsys):
    _, out, _ = run(["offset", "--channel", "rayleigh", "--mod1", "bpsk", "--mod2", "bpsk"], capsys)
    assert _offset_values(out) == (0.0, 0.0)
    _, out, _ = run(["offset", "--channel", "nakagami:m=2", "--mod1", "dpsk", "--mod2", "bpsk"], capsys)
    assert _offset_values(out)[0] == pytest.approx(2.13, abs=0.005)


def test_combine_mrc_constant(capsys):
    _, out, _ = run(["combine", "--scheme", "mrc", "--branches", "rayleigh,rayleigh", "--mod", "bpsk"], capsys)
    _, meta = parse_csv(out)
    const = next(m for m in meta if m.startswith("leading constant"))
    assert float(const.split("=")[1]) == pytest.approx(3 / 16, rel=1e-9)


def test_combine_sc_single_branch_equals_channel(capsys):
    _, a, _ = run(["combine", "--scheme", "sc", "--branches", "nakagami:m=2", "--mod", "bpsk", "--snr", "0:30:5"], capsys)
    _, b, _ = run(["asymptote", "--channel", "nakagami:m=2", "--mod", "bpsk", "--snr", "0:30:5"], capsys)
    assert [r["value"] for r in parse_csv(a)[0]] == [r["value"] for r in parse_csv(b)[0]]


def test_combine_three_branches_slope(capsys):
    argv = ["combine", "--scheme", "egc", "--branches", "nakagami:m=0.5,nakagami:m=1,nakagami:m=1.5", "--mod", "bpsk", "--snr", "40:70:10"]
    _, out, _ = run(argv, capsys)
    rows, _ = parse_csv(out)
    pts = [(10 ** (float(r["snr_db"]) / 10), float(r["value"])) for r in rows]
    assert loglog_slope(pts).slope == pytest.approx(-3.0, abs=1e-3)


def test_combine_with_mc_and_exact(capsys):
    argv = [
        "--seed", "9", "--draws", "20000",
        "combine", "--scheme", "mrc", "--branches", "rayleigh,rayleigh", "--mod", "dpsk", "--snr", "10:20:10", "--with-mc", "--with-exact",
    ]
    _, out, _ = run(argv, capsys)
    rows, meta = parse_csv(out)
    assert sorted({r["method"] for r in rows}) == ["asymptote", "exact", "montecarlo"]
    assert "seed = 9" in meta
    for r in rows:
        if r["method"] == "exact":
            rho = 10 ** (float(r["snr_db"]) / 10)
            assert float(r["value"]) == pytest.approx(0.5 / (1 + rho) ** 2, rel=1e-9)


def test_figure_to_directory(tmp_path, capsys):
    code, out, _ = run(["--out", str(tmp_path), "figure", "1"], capsys)
    assert code == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["fig1_bpsk.csv", "fig1_dpsk.csv"]
    rows, meta = parse_csv((tmp_path / "fig1_dpsk.csv").read_text())
    assert {r["method"] for r in rows} == {"asymptote", "exact", "wang"}
    gap = next(m for m in meta if m.startswith("exact crossing"))
    assert float(gap.split("gap ")[1].split()[0]) <= 0.1


def test_figure_stdout(capsys):
    code, out, _ = run(["figure", "2", "--snr", "20:30:5"], capsys)
    assert code == 0
    assert "# curve: fig2_bpsk" in out and "# curve: fig2_dpsk" in out


def test_figure_three_with_mc(capsys):
    code, out, _ = run(["--draws", "20000", "--importance", "figure", "3", "--snr", "10:25:5", "--with-mc"], capsys)
    assert code == 0
    assert "# curve: fig3_mrc" in out and "# curve: fig3_sc" in out
    assert out.count("montecarlo crossing") == 2


def test_output_file(tmp_path, capsys):
    path = tmp_path / "a.csv"
    code, out, _ = run(["--out", str(path), "asymptote", "--channel", "rayleigh", "--mod", "bpsk"], capsys)
    assert code == 0 and out == ""
    rows, _ = parse_csv(path.read_text())
    assert len(rows) == 21


def test_split_branches():
    assert split_branches("gk:m=2,k=1,rayleigh,nakagami:m=3") == ["gk:m=2,k=1", "rayleigh", "nakagami:m=3"]
    with pytest.raises(CliError):
        split_branches("rayleigh,,rayleigh")


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "fadeasym", "asymptote", "--channel", "rayleigh", "--mod", "dpsk", "--snr", "40:40:1"],
        capture_output=True,
        text=True,
        check=True,
    )
    rows, _ = parse_csv(proc.stdout)
    assert float(rows[0]["value"]) == pytest.approx(0.5 * -math.expm1(-1e-4), rel=1e-12)
