"""Entry-point behavior: flags, dispatch, error surface."""

import pytest

from conftest import GOLDEN
from riskfigs.cli import build_parser, main


class TestParser:
    def test_requires_input_kind_output(self, capsys):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])
        capsys.readouterr()

    def test_rejects_unknown_kind(self, capsys):
        with pytest.raises(SystemExit):
            build_parser().parse_args(
                ["--input", "x.csv", "--kind", "pie", "--output", "y.svg"]
            )
        capsys.readouterr()


class TestMain:
    def test_violin_end_to_end(self, tmp_path, capsys):
        dst = tmp_path / "fig.svg"
        code = main([
            "--input", str(GOLDEN / "compare_returns.csv"),
            "--kind", "violin", "--output", str(dst),
            "--title", "returns", "--ylabel", "return",
        ])
        out = capsys.readouterr().out
        assert code == 0
        assert dst.exists() and dst.with_suffix(".png").exists()
        assert "wrote" in out and "variance ratio" in out

    def test_bad_input_exits_2_with_message(self, tmp_path, capsys):
        code = main([
            "--input", str(tmp_path / "missing.csv"),
            "--kind", "violin", "--output", str(tmp_path / "fig.svg"),
        ])
        err = capsys.readouterr().err
        assert code == 2
        assert "error:" in err and "not found" in err

    def test_trace_and_density_end_to_end(self, tmp_path, capsys):
        for kind, src in (
            ("prob-trace", GOLDEN / "prob_trace.csv"),
            ("density", GOLDEN / "metadata.json"),
        ):
            dst = tmp_path / f"{kind}.svg"
            assert main(["--input", str(src), "--kind", kind, "--output", str(dst)]) == 0
            assert dst.exists() and dst.with_suffix(".png").exists()
        capsys.readouterr()
