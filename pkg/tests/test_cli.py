import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from xsrisk import bounds as bd
from xsrisk import cli, config, svg, tables
from xsrisk.errors import ConfigError


def run(tmp_path, *argv):
    out = tmp_path / "out"
    code = cli.main([*argv, "--out", str(out)])
    return code, out


def read(path):
    return tables.read_csv(path.read_text(encoding="utf-8"))


class TestTables:
    def curve(self):
        return bd.BoundCurve(np.array([0.1, 0.5]), {"sibson": np.array([1.0, math.inf]), "js": np.array([0.3, 0.2])},
                             {"true_excess": 0.01, "mi": 0.5}, {})

    def test_column_order_and_inf(self):
        text = tables.to_csv(self.curve(), {"b": 1, "a": [2]})
        lines = text.splitlines()
        assert lines[0] == "alpha,js,sibson,mi,true_excess"
        assert lines[2] == "0.5,0.2,inf,0.5,0.01"
        assert lines[3:] == ["# a: [2]", "# b: 1"]
        assert text.endswith("\n") and "\r" not in text

    def test_roundtrip(self):
        cols, meta = tables.read_csv(tables.to_csv(self.curve(), {"k": {"x": 1}}))
        assert cols["sibson"][1] == math.inf and meta == {"k": {"x": 1}}

    def test_fmt(self):
        assert tables.fmt(1 / 3) == "0.333333333333"
        assert tables.fmt(math.inf) == "inf"

    def test_json(self):
        doc = json.loads(tables.to_json(self.curve(), {"seed": 1}))
        assert doc["columns"]["sibson"] == [1.0, "inf"] and doc["metadata"] == {"seed": 1}

    def test_svg(self):
        text = svg.render(self.curve(), "t")
        root = ET.fromstring(text)
        assert root.get("width") == "800" and root.get("height") == "600" and root.get("version") == "1.1"
        assert "sibson" in text and "js" in text


class TestConfig:
    def test_presets(self):
        assert config.preset("q5")["discrete"]["prior"] == [0.25, 0.1, 0.4, 0.15, 0.1]
        with pytest.raises(ConfigError, match="preset"):
            config.preset("q7")

    def test_dotted(self):
        cfg = config.set_dotted({}, "discrete.eps2", "0")
        assert cfg == {"discrete": {"eps2": 0}}

    def test_exactly_one_block(self):
        with pytest.raises(ConfigError, match="exactly one"):
            config.model_kind({"discrete": {}, "gaussian": {}})

    def test_field_named(self):
        with pytest.raises(ConfigError, match="discrete.eps1"):
            config.build_discrete({"prior": [0.5, 0.5], "eps1": "x", "eps2": 0.1})

    def test_alpha_grid(self):
        g = config.alpha_grid({})
        assert g.size == 99 and g[0] == 0.01 and g[-1] == 0.99
        with pytest.raises(ConfigError):
            config.alpha_grid({"alpha": {"stop": 1.0}})


class TestQsc:
    def test_q2_preset(self, tmp_path, capsys):
        code, out = run(tmp_path, "qsc", "--preset", "q2", "--format", "csv,json,svg")
        assert code == 0
        cols, meta = read(out / "q2.csv")
        assert list(cols) == ["alpha", "renyi", "js", "sibson", "mi", "true_excess"]
        assert cols["alpha"].size == 99
        assert np.any(cols["js"] < cols["mi"])
        assert meta["config"]["discrete"]["prior"] == [0.3, 0.7]
        assert "numpy" in meta["versions"]
        json.loads((out / "q2.json").read_text())
        ET.fromstring((out / "q2.svg").read_text())
        assert "below mi" in capsys.readouterr().out

    def test_deterministic(self, tmp_path):
        run(tmp_path, "qsc", "--preset", "q10")
        first = (tmp_path / "out" / "q10.csv").read_bytes()
        run(tmp_path, "qsc", "--preset", "q10")
        assert (tmp_path / "out" / "q10.csv").read_bytes() == first
        assert json.loads(first.decode().split("# seeds: ")[1].splitlines()[0]) == {"dirichlet": 42}

    def test_eps2_zero(self, tmp_path):
        code, out = run(tmp_path, "qsc", "--preset", "q3", "--discrete.eps2=0")
        assert code == 0
        cols, _ = read(out / "q3.csv")
        for m in ("renyi", "js", "sibson"):
            assert np.all(cols[m] == 0.0)

    def test_gaussian_preset_rejected(self, tmp_path):
        with pytest.raises(SystemExit) as e:
            run(tmp_path, "qsc", "--preset", "example2")
        assert e.value.code == 2

    def test_out_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("XSRISK_OUT", str(tmp_path / "env"))
        assert cli.main(["qsc", "--alpha-count", "3"]) == 0
        assert (tmp_path / "env" / "q2.csv").exists()

    def test_alpha_one_is_usage_error(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as e:
            run(tmp_path, "qsc", "--alpha-stop", "1.0")
        assert e.value.code == 2
        assert not (tmp_path / "out").exists()
        assert "alpha" in capsys.readouterr().err


class TestGaussian:
    def test_example2(self, tmp_path):
        code, out = run(tmp_path, "gaussian", "--preset", "example2", "--methods", "js,renyi,lautum")
        assert code == 0
        cols, meta = read(out / "example2.csv")
        assert list(cols) == ["alpha", "renyi", "js", "mi", "lautum"]
        assert meta["e_sigma2"] == pytest.approx(0.898942, abs=1e-6)
        a = cols["alpha"]
        assert np.all(cols["js"][a < 0.3] < cols["mi"][a < 0.3])
        assert np.all(cols["js"][a > 0.35] > cols["mi"][a > 0.35])
        assert meta["config"]["quad_order"] == 64

    def test_small_radius(self, tmp_path):
        code, out = run(tmp_path, "gaussian", "--preset", "example3", "--gaussian.c=0.001", "--alpha-count", "3")
        assert code == 0
        _, meta = read(out / "example3.csv")
        assert meta["e_sigma2"] == pytest.approx(meta["var_y"] / 4, rel=2e-3)

    def test_sibson_rejected(self, tmp_path):
        with pytest.raises(SystemExit) as e:
            run(tmp_path, "gaussian", "--methods", "sibson")
        assert e.value.code == 2

    def test_low_quad_order(self, tmp_path):
        with pytest.raises(SystemExit):
            run(tmp_path, "gaussian", "--quad-order", "4")


class TestSweep:
    def test_matches_qsc(self, tmp_path):
        cfg = tmp_path / "q2.json"
        cfg.write_text(json.dumps(config.preset("q2")))
        run(tmp_path, "qsc", "--preset", "q2")
        a = (tmp_path / "out" / "q2.csv").read_bytes()
        (tmp_path / "out" / "q2.csv").unlink()
        assert run(tmp_path, "sweep", "--config", str(cfg))[0] == 0
        assert (tmp_path / "out" / "q2.csv").read_bytes() == a

    def test_chain_from_files(self, tmp_path):
        rng = np.random.default_rng(5)
        np.savetxt(tmp_path / "w1.txt", rng.dirichlet(np.ones(4), 3))
        np.savetxt(tmp_path / "w2.txt", rng.dirichlet(np.ones(2), 4), delimiter=",")
        cfg = {"discrete": {"prior": [0.2, 0.3, 0.5], "w1": "w1.txt", "w2": "w2.txt"}, "alpha": {"count": 9}}
        (tmp_path / "chain.json").write_text(json.dumps(cfg))
        code, out = run(tmp_path, "sweep", "--config", str(tmp_path / "chain.json"))
        assert code == 0
        cols, _ = read(out / "chain.csv")
        assert cols["alpha"].size == 9 and np.all(np.isfinite(cols["sibson"]))

    def test_flags_override_file(self, tmp_path):
        (tmp_path / "c.json").write_text(json.dumps({**config.preset("q3"), "alpha": {"count": 50}}))
        _, out = run(tmp_path, "sweep", "--config", str(tmp_path / "c.json"), "--alpha-count", "4")
        assert read(out / "c.csv")[0]["alpha"].size == 4

    def test_non_stochastic_row(self, tmp_path, capsys):
        cfg = {"discrete": {"prior": [0.5, 0.5], "w1": [[1, 0], [0.5, 0.4]], "w2": [[1, 0], [0, 1]]}}
        (tmp_path / "bad.json").write_text(json.dumps(cfg))
        with pytest.raises(SystemExit) as e:
            run(tmp_path, "sweep", "--config", str(tmp_path / "bad.json"))
        assert e.value.code == 2
        err = capsys.readouterr().err
        assert "row 1" in err and "0.9" in err
        assert not (tmp_path / "out").exists()

    @pytest.mark.parametrize("text", ["{not json", "[1, 2]", '{"discrete": {"eps1": 0.1}}', '{"methods": ["js"]}'])
    def test_malformed(self, tmp_path, text):
        (tmp_path / "m.json").write_text(text)
        with pytest.raises(SystemExit) as e:
            run(tmp_path, "sweep", "--config", str(tmp_path / "m.json"))
        assert e.value.code == 2
        assert not (tmp_path / "out").exists()

    def test_needs_config(self, tmp_path):
        with pytest.raises(SystemExit):
            run(tmp_path, "sweep")


class TestValidate:
    def test_only_sibson(self, tmp_path, capsys):
        code, out = run(tmp_path, "validate", "--only", "sibson", "--sibson-count", "3", "--identity-count", "5")
        assert code == 0
        recs = [json.loads(x) for x in (out / "validate_report.jsonl").read_text().splitlines()]
        assert {r["name"].split("/")[0] for r in recs} == {"sibson"}
        assert all(r["passed"] for r in recs)
        assert "3/3 checks passed" in capsys.readouterr().out

    def test_alpha_one_no_output(self, tmp_path):
        with pytest.raises(SystemExit) as e:
            run(tmp_path, "validate", "--alpha-stop", "1.0")
        assert e.value.code == 2
        assert not (tmp_path / "out").exists()

    def test_unknown_group(self, tmp_path):
        with pytest.raises(SystemExit):
            run(tmp_path, "validate", "--only", "everything")

    def test_failing_check_named(self, tmp_path, monkeypatch, capsys):
        from xsrisk import oracles

        monkeypatch.setattr(oracles, "sibson_suite", lambda *a, **k: [oracles.OracleReport("sibson/x", 1.0, 1.0, 0.1)])
        code, _ = run(tmp_path, "validate", "--only", "sibson")
        assert code == 1
        assert "sibson/x" in capsys.readouterr().err
