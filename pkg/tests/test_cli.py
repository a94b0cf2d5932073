import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from zerostats import delta_engine as de
from zerostats import spike_analysis as sa
from zerostats import zero_ingest as zi
from zerostats.cli import main
from zerostats.cli import export, recipes
from zerostats.zeta_engine import find_riemann_zeros

from reference_tables import ZETA_TABLE


@pytest.fixture(scope="module")
def small_hist():
    return de.auto_deltas(find_riemann_zeros(2000), de.WindowParams(30, 0.1))


# --- CSV -------------------------------------------------------------------------

def test_csv_roundtrip(tmp_path, small_hist):
    p = export.export_csv(small_hist, tmp_path / "h.csv")
    back = export.read_histogram_csv(p)
    assert back.counts.dtype.kind == "i"
    assert np.array_equal(back.counts, small_hist.counts)
    assert (back.bin_width, back.t_max, back.n_source, back.kind) == \
        (small_hist.bin_width, small_hist.t_max, small_hist.n_source, small_hist.kind)
    assert back.max_ordinate == small_hist.max_ordinate


def test_csv_filtered_fifteen_digits(tmp_path, small_hist):
    f = de.moving_average(small_hist, 5)
    text = export.histogram_csv(f)
    row = text.splitlines()[text.splitlines().index("k,bin_start,count") + 101]
    assert row.split(",")[2] == "%.15g" % f.counts[100]
    back = export.read_histogram_csv(export.export_csv(f, tmp_path / "f.csv"))
    assert np.allclose(back.counts, f.counts, rtol=1e-14, atol=0)


def test_csv_rejects_foreign_file(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        export.read_histogram_csv(p)


def test_report_csv():
    rep = sa.match_zeros([14.1, 21.0, 99.0], [14.134725142, 21.022039639, 25.01], tol=0.25)
    text = export.report_csv(rep)
    lines = text.splitlines()
    assert "status,reference,recovered,error" in lines
    assert any(l.startswith("matched,14.134725142,14.1,") for l in lines)
    assert any(l.startswith("missed,25.01") for l in lines)
    assert any(l.startswith("spurious") or l.startswith("unmatched") for l in lines)


# --- SVG -------------------------------------------------------------------------

def test_svg_annotations(small_hist):
    zeros = [ZETA_TABLE[i] for i in range(1, 5)]
    svg = export.render_svg(small_hist, export.PlotSpec((10, 30), annotations=tuple(zeros[:3]) + (29.5,)))
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")
    assert svg.count('class="annotation"') == 4
    # gamma_4 = 30.42 falls outside [10, 30] and is not drawn
    svg = export.render_svg(small_hist, export.PlotSpec((10, 30), annotations=tuple(zeros)))
    assert svg.count('class="annotation"') == 3


def test_svg_empty_histogram():
    h = de.auto_deltas(np.array([5.0]), de.WindowParams(10, 0.1))
    ET.fromstring(export.render_svg(h, export.PlotSpec()))


def test_svg_range_errors(small_hist):
    with pytest.raises(ValueError):
        export.render_svg(small_hist, export.PlotSpec((40, 50)))
    with pytest.raises(ValueError):
        export.PlotSpec((5, 5))
    with pytest.raises(ValueError):
        export.PlotSpec(style="pie")


def test_svg_deterministic(small_hist):
    spec = export.PlotSpec((10, 30), style="line")
    assert export.render_svg(small_hist, spec) == export.render_svg(small_hist, spec)


# --- recipes ---------------------------------------------------------------------

def test_empty_sources_is_config_error():
    with pytest.raises(recipes.ConfigError):
        recipes.RecipeConfig.from_dict({"sources": {}, "window": {"t_max": 10, "bin_width": 0.1}})


def test_bad_configs():
    base = {"sources": {"a": {"kind": "riemann", "n": 100}}, "window": {"t_max": 10, "bin_width": 0.1}}
    with pytest.raises(recipes.ConfigError):
        recipes.RecipeConfig.from_dict({**base, "chain": [{"op": "smooth"}]})
    with pytest.raises(recipes.ConfigError):
        recipes.RecipeConfig.from_dict({**base, "chain": [{"op": "match", "reference": "c"}]})
    with pytest.raises(recipes.ConfigError):
        recipes.RecipeConfig.from_dict({**base, "budgets": {"riemann_zeros": 0}})
    with pytest.raises(recipes.ConfigError):
        recipes.RecipeConfig.from_dict({**base, "colour": "red"})
    with pytest.raises(ValueError):
        recipes.RecipeConfig.from_dict({**base, "window": {"t_max": 10}})


def test_bundled_recipes_validate():
    assert set(recipes.BUNDLED) == {"stats-a", "stats-b", "mate-chi3", "euler-comb-23", "gue-fresnel"}
    for name in recipes.BUNDLED:
        assert recipes.bundled(name).name == name
    with pytest.raises(recipes.ConfigError):
        recipes.bundled("stats-z")


SMALL = {
    "name": "small",
    "sources": {"a": {"kind": "riemann", "n": 3000}},
    "window": {"t_max": 40, "bin_width": 0.1},
    "chain": [{"op": "moving_average", "tau": 3},
              {"op": "detect", "threshold_quantile": 0.1, "gap": 1},
              {"op": "match", "reference": "zeros:riemann", "tol": 0.25}],
    "outputs": {"histogram": "h.csv", "report": "r.csv", "groups": "g.csv", "svg": "p.svg",
                "svg_range": [10, 30], "annotate": "zeros:riemann"},
}


def test_recipe_deterministic(tmp_path):
    cfg = recipes.RecipeConfig.from_dict(SMALL)
    r1 = recipes.run_recipe(cfg, tmp_path / "one", log=lambda s: None)
    r2 = recipes.run_recipe(recipes.RecipeConfig.from_dict(SMALL), tmp_path / "two", log=lambda s: None)
    for name in ("h.csv", "r.csv", "g.csv", "p.svg"):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()
    assert r1.report.recall > 0.5
    assert not list((tmp_path / "one").glob(".stage-*"))


def test_recipe_failure_leaves_no_outputs(tmp_path):
    d = dict(SMALL, chain=[{"op": "gue_correct"}])
    with pytest.raises(recipes.ConfigError):
        recipes.run_recipe(recipes.RecipeConfig.from_dict(d), tmp_path / "out", log=lambda s: None)
    assert not (tmp_path / "out").exists() or not any((tmp_path / "out").iterdir())


def test_load_config_yaml_and_json(tmp_path):
    import yaml

    (tmp_path / "c.yaml").write_text(yaml.safe_dump(SMALL))
    (tmp_path / "c.json").write_text(json.dumps(SMALL))
    assert recipes.load_config(tmp_path / "c.yaml") == recipes.load_config(tmp_path / "c.json")


# --- command line ----------------------------------------------------------------

def test_predict_chi3_chi4(capsys):
    assert main(["predict", "--modulus", "3", "--char-index", "2", "--modulus-b", "4", "--char-index-b", "2",
                 "--t-max", "10"]) == 0
    out = capsys.readouterr().out
    assert "L_chi[12,4](s+1/2)^-1" in out
    assert "3.80462" in out


def test_predict_comb(capsys):
    assert main(["predict", "zeta", "f:23", "--t-max", "10"]) == 0
    assert "2.00389" in capsys.readouterr().out


def test_zeros_deltas_analyze_plot(tmp_path, capsys):
    z = tmp_path / "z.zseq"
    assert main(["zeros", "--n", "2000", "-o", str(z), "--show", "3"]) == 0
    assert len(zi.read_cache(z)) == 2000
    h = tmp_path / "h.csv"
    assert main(["deltas", str(z), "--t-max", "30", "--bin", "0.1", "--moving-average", "3", "-o", str(h)]) == 0
    rep = tmp_path / "r.csv"
    assert main(["analyze", str(h), "--riemann", "--gap", "1", "--report", str(rep)]) == 0
    # three zeros lie below 30
    assert rep.read_text().count("matched,") == 3
    svg = tmp_path / "p.svg"
    assert main(["plot", str(h), "-o", str(svg), "--range", "10", "30", "--annotate-zeros"]) == 0
    ET.fromstring(svg.read_text())
    assert main(["analyze", str(h), "--gue-fit", "--fit-range", "0", "2"]) == 0
    assert "lower" in capsys.readouterr().out


def test_ingest_split(tmp_path):
    src = tmp_path / "t.dat"
    src.write_text("1 -6.201230\n2 4.356402\n3 8.785555\n")
    out = tmp_path / "chi.zseq"
    assert main(["ingest", str(src), "--dialect", "columnar", "--column", "2", "--split", "-o", str(out)]) == 0
    caches = sorted(p.name for p in tmp_path.glob("*.zseq"))
    assert len(caches) == 2


def test_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("1.0\nxyz\n")
    assert main(["ingest", str(bad)]) == 2
    assert main(["plot", str(tmp_path / "missing.csv"), "-o", str(tmp_path / "p.svg")]) == 2
    assert main(["recipe", "no-such-recipe"]) == 2
    assert "bad.txt" in capsys.readouterr().err


def test_recipe_list(capsys):
    assert main(["recipe", "--list"]) == 0
    out = capsys.readouterr().out
    for name in recipes.BUNDLED:
        assert name in out


def test_recipe_from_config_file(tmp_path):
    cfg = tmp_path / "small.json"
    cfg.write_text(json.dumps(SMALL))
    assert main(["recipe", str(cfg), "--out-dir", str(tmp_path / "out"), "--cache-dir", str(tmp_path / "c")]) == 0
    assert (tmp_path / "out" / "h.csv").exists()
