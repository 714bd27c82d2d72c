import json
import pathlib

import pytest

from structscan_plots import FigureSpec, SchemaError, render
from structscan_plots.cli import main, spec_from_dict

DATA = pathlib.Path(__file__).parent / "data"

BIAS = str(DATA / "bias_interval_n200.json")
BIAS_ALL_N = tuple(str(DATA / f"bias_interval_n{n}.json") for n in (100, 200, 400))
UNSTRUCTURED = str(DATA / "bias_unstructured_n200.json")
WASSERSTEIN = str(DATA / "wasserstein.json")
MU_DETECT = str(DATA / "mu_detect_interval.curve.csv")


def png_ok(path):
    data = pathlib.Path(path).read_bytes()
    assert data[:8] == b"\x89PNG\r\n\x1a\n"
    assert len(data) > 2000


class TestPanels:
    def test_bias_mu(self, tmp_path):
        out = render(FigureSpec(
            reports=(BIAS, UNSTRUCTURED), kind="bias_mu",
            out=str(tmp_path / "bias_mu.png"), labels=("interval", "unstructured"),
        ))
        png_ok(out)

    def test_bias_n(self, tmp_path):
        out = render(FigureSpec(
            reports=BIAS_ALL_N, kind="bias_n", out=str(tmp_path / "bias_n.png"),
            labels=("interval",) * 3,
        ))
        png_ok(out)

    def test_fmeasure_mu(self, tmp_path):
        out = render(FigureSpec(
            reports=(BIAS, UNSTRUCTURED), kind="fmeasure_mu",
            out=str(tmp_path / "f.png"),
        ))
        png_ok(out)

    def test_wasserstein_loglog(self, tmp_path):
        out = render(FigureSpec(
            reports=(WASSERSTEIN,), kind="wasserstein_loglog",
            out=str(tmp_path / "w.png"),
        ))
        png_ok(out)

    def test_mu_detect_curves(self, tmp_path):
        out = render(FigureSpec(
            reports=(MU_DETECT,), kind="mu_detect_curves",
            out=str(tmp_path / "md.png"), labels=("interval",),
        ))
        png_ok(out)

    def test_extension_added_when_missing(self, tmp_path):
        out = render(FigureSpec(reports=(BIAS,), kind="bias_mu", out=str(tmp_path / "noext")))
        assert out.endswith(".png")
        png_ok(out)

    def test_deterministic_bytes(self, tmp_path):
        spec1 = FigureSpec(reports=(BIAS,), kind="bias_mu", out=str(tmp_path / "a.png"))
        spec2 = FigureSpec(reports=(BIAS,), kind="bias_mu", out=str(tmp_path / "b.png"))
        render(spec1)
        render(spec2)
        assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()


class TestSchemaErrors:
    def test_missing_column_named(self, tmp_path):
        payload = json.loads(pathlib.Path(BIAS).read_text())
        for cell in payload["cells"]:
            del cell["bias_q1"]
        broken = tmp_path / "broken.json"
        broken.write_text(json.dumps(payload))
        with pytest.raises(SchemaError, match="bias_q1"):
            render(FigureSpec(reports=(str(broken),), kind="bias_mu", out=str(tmp_path / "x.png")))
        assert not (tmp_path / "x.png").exists()

    def test_missing_summary_field(self, tmp_path):
        payload = json.loads(pathlib.Path(BIAS).read_text())
        del payload["cells"]
        broken = tmp_path / "broken.json"
        broken.write_text(json.dumps(payload))
        with pytest.raises(SchemaError, match="cells"):
            render(FigureSpec(reports=(str(broken),), kind="bias_mu", out=str(tmp_path / "x.png")))

    def test_curve_missing_column(self, tmp_path):
        broken = tmp_path / "c.csv"
        broken.write_text("mu,wrong\n1.0,0.5\n")
        with pytest.raises(SchemaError, match="type2_error"):
            render(FigureSpec(reports=(str(broken),), kind="mu_detect_curves", out=str(tmp_path / "x.png")))

    def test_unknown_kind_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="panel kind"):
            FigureSpec(reports=(BIAS,), kind="hexbin", out=str(tmp_path / "x.png"))

    def test_empty_reports_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            FigureSpec(reports=(), kind="bias_mu", out=str(tmp_path / "x.png"))


class TestCli:
    def test_renders_all_kinds_from_one_config(self, tmp_path, capsys):
        specs = [
            {"reports": [BIAS, UNSTRUCTURED], "kind": "bias_mu", "out": str(tmp_path / "1.png")},
            {"reports": list(BIAS_ALL_N), "kind": "bias_n", "out": str(tmp_path / "2.png"),
             "labels": ["interval"] * 3},
            {"reports": [BIAS], "kind": "fmeasure_mu", "out": str(tmp_path / "3.png")},
            {"reports": [WASSERSTEIN], "kind": "wasserstein_loglog", "out": str(tmp_path / "4.png")},
            {"reports": [MU_DETECT], "kind": "mu_detect_curves", "out": str(tmp_path / "5.png")},
        ]
        cfg = tmp_path / "figures.json"
        cfg.write_text(json.dumps(specs))
        assert main(["--config", str(cfg)]) == 0
        for i in range(1, 6):
            png_ok(tmp_path / f"{i}.png")

    def test_schema_error_exit_code(self, tmp_path):
        broken = tmp_path / "c.csv"
        broken.write_text("bad,header\n")
        cfg = tmp_path / "f.json"
        cfg.write_text(json.dumps({
            "reports": [str(broken)], "kind": "mu_detect_curves", "out": str(tmp_path / "x.png"),
        }))
        assert main(["--config", str(cfg)]) == 1

    def test_spec_from_dict_validates(self):
        with pytest.raises(ValueError, match="missing field"):
            spec_from_dict({"kind": "bias_mu"})
