from pathlib import Path

import pytest

from lips.cli import main

ROOT = Path(__file__).resolve().parents[1]
REF_TOML = ROOT / "configs" / "ref.toml"
SMALL = ["--resolution", "80", "80", "--samples", "201", "--grid-n", "1001"]


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def report_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("report")
    assert run("report", "--config", REF_TOML, "--out", out) == 0
    return out


def test_report_outputs(report_dir):
    for name in ("curves.csv", "curves.svg", "grid.csv", "summary.txt", "singular_points.csv"):
        assert (report_dir / name).stat().st_size > 0
    summary = (report_dir / "summary.txt").read_text()
    assert "unexplained: 0" in summary and "violations: 0" in summary


def test_every_output_has_header(report_dir):
    for path in report_dir.iterdir():
        lines = path.read_text().splitlines()
        text = "\n".join(lines[:4])
        assert "config-sha256=" in text and "tolerances" in text, path.name


def test_affine_roots(capsys):
    assert run("roots", "--p", 2, "--q", 1.5, "--f", "identity-affine") == 0
    out = capsys.readouterr().out
    assert "0.5" in out


def test_strata_label(capsys):
    assert run("strata", "--eps", -0.1, "--delta", 0.2, "--lambda", 0.0) == 0
    assert "7: a saddle and a stable node" in capsys.readouterr().out


def test_strata_from_csv(tmp_path, capsys):
    src = tmp_path / "pts.csv"
    src.write_text("eps,delta,lambda\n-0.1,0.2,0.0\n-0.1,-0.2,0.0\n")
    assert run("strata", "--input", src, "--out", tmp_path) == 0


def test_cyclicity_command(tmp_path, capsys):
    assert run("cyclicity", "--out", tmp_path) == 0
    assert "cyclicity <= 3" in capsys.readouterr().out
    assert (tmp_path / "cyclicity_witnesses.csv").exists()


def test_other_commands(tmp_path):
    assert run("flips", "--out", tmp_path) == 0
    assert run("blowup", "--eps", 0.3, "--delta", 0.2, "--lambda", 0.1, "--out", tmp_path) == 0
    assert run("transition-verify", "--eps", 0.25, "--y0", 0.1, "--out", tmp_path) == 0


def test_csv_deterministic_and_svg_up_to_version(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run("oracle", "--overlay", "--out", d, *SMALL) == 0
        assert run("curves", "--out", d, *SMALL) == 0
    for path in a.iterdir():
        other = b / path.name
        if path.suffix == ".svg":
            strip = lambda p: [l for l in p.read_text().splitlines() if "version" not in l]
            assert strip(path) == strip(other)
        else:
            assert path.read_bytes() == other.read_bytes(), path.name


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('resolution = [60, 60]\n[f]\nkind = "reference"\n')
    assert run("oracle", "--config", cfg, "--resolution", "70", "70", "--out", tmp_path) == 0
    rows = [l for l in (tmp_path / "grid.csv").read_text().splitlines() if l and l[0] not in "#p"]
    assert len(rows) == 70 * 70


@pytest.mark.parametrize("argv", [
    ["nosuch"],
    ["roots", "--bogus", "1"],
    ["oracle", "--resolution", "5000", "5000"],
    ["oracle", "--p-min", "1"],
    ["roots", "--f", "poly:abc", "--p", "1", "--q", "0"],
])
def test_argument_errors_exit_2(argv, capsys):
    assert run(*argv) == 2
    assert "usage" in capsys.readouterr().err


def test_malformed_config_exit_2(tmp_path, capsys):
    for text in ("resolution = [\n", "[grid]\nn = 3\n", 'resolution = ["x", 1]\n'):
        cfg = tmp_path / "bad.toml"
        cfg.write_text(text)
        assert run("oracle", "--config", cfg, "--out", tmp_path) == 2
        assert "usage" in capsys.readouterr().err


def test_domain_error_exit_1(capsys):
    assert run("roots", "--p", 1, "--q", 0, "--f", "identity-affine") == 1
    assert "Error" in capsys.readouterr().err
