import json
import math

import numpy as np
import pytest

from ddpce.cli import main
from ddpce.errors import ConfigurationError
from ddpce.harness import (
    ExperimentConfig,
    emit_report,
    parse_config,
    run_experiment,
    with_seed_override,
)
from ddpce.sampling import load_samples

POLY = """
model = poly_d3
inputs = uniform(-1, 1); uniform(0, 2); normal(0.5, 0.3)
m_train = 80
m_ref = 2000
degree = 2
schemes = ols, cls, tempered
alphas = 0.5, 1.0
seed_train = 11
seed_ref = 12
"""

SMALL_DISPATCH = """
model = dispatch
m_train = 60
m_ref = 3000
degree = 2
alphas = 0.5, 1.5
alpha_convention = inverse
stability_threshold = 1.0
"""


def test_parse_config_values():
    cfg = parse_config(POLY + "quantiles = 0.5\n# trailing comment\n")
    assert cfg.model == "poly_d3"
    assert cfg.inputs.d == 3
    assert cfg.alphas == (0.5, 1.0)
    assert cfg.schemes == ("ols", "cls", "tempered")
    assert cfg.quantiles == (0.5,)
    assert [c.label for c in cfg.cases()] == ["OLS", "CLS", "alpha=0.5", "alpha=1.0"]


def test_parse_config_rejects_bad_input():
    with pytest.raises(ConfigurationError, match="unknown config keys: bogus"):
        parse_config("bogus = 1\n")
    with pytest.raises(ConfigurationError):
        parse_config("m_train = many\n")
    with pytest.raises(ConfigurationError):
        parse_config("seed_train = 3\nseed_ref = 3\n")
    with pytest.raises(ConfigurationError):
        parse_config("alpha_convention = sideways\n")
    with pytest.raises(ConfigurationError):
        parse_config("model = dispatch\ninputs = uniform(0, 1)\n")


def test_dispatch_overrides():
    cfg = parse_config("dispatch.levels = 0.5:10, 0.5:1\ndispatch.generation = 0.4\n")
    assert [lv.penalty for lv in cfg.dispatch.levels] == [10.0, 1.0]
    assert np.all(cfg.dispatch.generation == 0.4)


def test_inverse_convention_maps_signs():
    cfg = ExperimentConfig(alpha_convention="inverse", alphas=(1.0,))
    cases = {c.label: c for c in cfg.cases()}
    assert cases["CLS"].alpha == 1.0 and cases["CLS"].scheme.alpha == -1.0
    assert cases["alpha=1.0"].scheme.alpha == -1.0
    direct = {c.label: c for c in ExperimentConfig(alphas=(1.0,)).cases()}
    assert direct["alpha=1.0"].scheme.alpha == 1.0


def test_polynomial_model_is_reproduced_exactly():
    report = run_experiment(parse_config(POLY))
    assert all(r.ok for r in report.rows)
    for r in report.rows:
        for v in (r.p5_dev, r.p95_dev, r.mean_dev, r.std_dev):
            assert abs(v) <= 0.1


def test_tempered_endpoints_match_named_schemes():
    cfg = parse_config(POLY.replace("alphas = 0.5, 1.0", "alphas = 0, -1"))
    report = run_experiment(cfg)
    ols, cls = report.row("OLS"), report.row("CLS")
    t0, tm1 = report.row("alpha=0.0"), report.row("alpha=-1.0")
    for a, b in ((ols, t0), (cls, tm1)):
        assert (a.p5_dev, a.p95_dev, a.mean_dev, a.std_dev) == (b.p5_dev, b.p95_dev, b.mean_dev, b.std_dev)


def test_reference_independent_of_training_size():
    a = run_experiment(parse_config(POLY))
    b = run_experiment(parse_config(POLY.replace("m_train = 80", "m_train = 120")))
    assert a.reference == b.reference


def test_failing_case_does_not_abort(caplog):
    report = run_experiment(parse_config(POLY.replace("alphas = 0.5, 1.0", "alphas = 0.5, 1e6")))
    assert report.row("alpha=0.5").ok
    bad = report.row("alpha=1000000.0")
    assert not bad.ok and math.isnan(bad.p95_dev)
    assert "NumericRangeError" in bad.error


def test_auto_sparse_when_underdetermined():
    cfg = parse_config(POLY.replace("m_train = 80", "m_train = 8").replace("degree = 2", "degree = 3"))
    report = run_experiment(cfg)
    assert report.provenance["fit_mode"] == "sparse"
    assert report.provenance["n_terms"] == 20


def test_emit_report_is_deterministic(tmp_path):
    cfg = parse_config(SMALL_DISPATCH)
    emit_report(run_experiment(cfg), tmp_path / "a")
    emit_report(run_experiment(cfg), tmp_path / "b")
    for name in ("table.csv", "curves.csv", "meta.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    table = (tmp_path / "a" / "table.csv").read_text().splitlines()
    assert table[0].startswith("case,p5_dev,p95_dev,mean_dev,std_dev")
    assert [line.split(",")[0] for line in table[1:]] == ["OLS", "CLS", "alpha=0.5", "alpha=1.5"]
    curves = (tmp_path / "a" / "curves.csv").read_text().splitlines()
    assert len(curves) == 5
    assert all(line.split(",")[-1] in ("0", "1") for line in curves[1:])


def test_seed_override():
    cfg = with_seed_override(parse_config(POLY), 40)
    assert (cfg.seed_ref, cfg.seed_train) == (40, 41)


def test_low_reference_size_warns(caplog):
    cfg = parse_config(POLY.replace("m_ref = 2000", "m_ref = 100"))
    with caplog.at_level("WARNING"):
        run_experiment(cfg)
    assert "below 10 * m_train" in caplog.text


# command line ----------------------------------------------------------------

def test_cli_run_sample_basis_fit(tmp_path, capsys):
    cfg = tmp_path / "poly.cfg"
    cfg.write_text(POLY)
    out = tmp_path / "run"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    assert capsys.readouterr().out.startswith("case,")
    assert (out / "curves.csv").exists()

    samples = tmp_path / "s.csv"
    assert main(["sample", "--config", str(cfg), "--out", str(samples), "--with-response"]) == 0
    s = load_samples(samples)
    assert s.m == 80 and s.y is not None

    basis = tmp_path / "basis.ini"
    assert main(["basis", "--samples", str(samples), "--degree", "2", "--out", str(basis)]) == 0
    model = tmp_path / "model.ini"
    assert main(["fit", "--samples", str(samples), "--basis", str(basis),
                 "--scheme", "tempered(0.5)", "--out", str(model)]) == 0
    text = capsys.readouterr().out
    assert "score_lr=" in text and model.exists()


def test_cli_reports_errors_as_json(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("nonsense = 2\n")
    assert main(["run", "--config", str(bad)]) != 0
    err = capsys.readouterr().err.strip().splitlines()[-1]
    assert err.startswith("error: ")
    payload = json.loads(err[len("error: "):])
    assert payload["type"] == "ConfigurationError"
    assert main(["basis", "--samples", str(tmp_path / "missing.csv"), "--degree", "2",
                 "--out", str(tmp_path / "b.ini")]) != 0


def test_cli_stability_threshold_flag(tmp_path, capsys):
    cfg = tmp_path / "poly.cfg"
    cfg.write_text(POLY)
    out = tmp_path / "run"
    assert main(["run", "--config", str(cfg), "--out", str(out), "--stability-threshold", "1e9"]) == 0
    rows = (out / "curves.csv").read_text().splitlines()[1:]
    assert rows and all(r.endswith(",0") for r in rows)
    assert "stability_threshold = 1000000000.0" in (out / "meta.txt").read_text()
