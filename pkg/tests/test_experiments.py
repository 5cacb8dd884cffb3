import json
import xml.etree.ElementTree as ET

import pytest

from anneal_rbm.errors import InvalidParameterError
from anneal_rbm.experiments import (ExperimentConfig, config_from_dict,
                                    config_to_dict, emit_report, gsp,
                                    render_report, report_from_dict,
                                    report_to_dict, run_qac_comparison,
                                    run_scaling)
from anneal_rbm.samplers import NoiseModel


def test_gsp_arithmetic():
    assert gsp([(-5.0, -5.0)] * 3 + [(-4.0, -5.0)] * 7) == 0.3
    assert gsp([(-1.0, -1.0)] * 4) == 1.0
    assert gsp([(0.0, -1.0)] * 4) == 0.0


def test_gsp_empty_rejected():
    with pytest.raises(InvalidParameterError):
        gsp([])


def test_config_validation():
    with pytest.raises(InvalidParameterError):
        ExperimentConfig(study="bogus")
    with pytest.raises(InvalidParameterError):
        ExperimentConfig(instances_per_cell=0)
    with pytest.raises(InvalidParameterError):
        ExperimentConfig(bias_sets=())


def test_config_round_trip_with_noise():
    cfg = ExperimentConfig(study="scaling", graph_m=4, seed=3,
                           noise=NoiseModel(sigma_h=0.1, chip_seed=2,
                                            region_bias=((frozenset({1, 2}), 0.5),)))
    again = config_from_dict(config_to_dict(cfg))
    assert again == cfg


SMOKE = ExperimentConfig(study="qac_comparison", graph_m=4,
                         bias_sets=((9.0, 2.0),), instances_per_cell=3,
                         num_reads=30, sweeps=150, seed=11)


@pytest.fixture(scope="module")
def qac_report():
    return run_qac_comparison(SMOKE)


def test_qac_comparison_noiseless_reaches_gsp_one(qac_report):
    assert {c.method for c in qac_report.cells} == {"rbm", "qac", "sqa"}
    for c in qac_report.cells:
        assert c.gsp == 1.0
        assert c.mean_best == c.mean_planted


def test_report_lower_bound_invariant(qac_report):
    for c in qac_report.cells:
        for r in c.records:
            assert r["best"] >= r["planted"]
        assert c.mean_normalized <= 1.0


def test_report_round_trip(qac_report):
    data = json.loads(json.dumps(report_to_dict(qac_report)))
    again = report_from_dict(data)
    assert report_to_dict(again) == report_to_dict(qac_report)


def test_report_determinism(qac_report):
    again = run_qac_comparison(SMOKE)
    assert report_to_dict(again) == report_to_dict(qac_report)
    assert render_report(again)["report.csv"] == render_report(qac_report)["report.csv"]


def test_csv_row_count_and_shape(qac_report):
    payload = render_report(qac_report)["report.csv"]
    lines = payload.strip().splitlines()
    assert len(lines) - 1 == len(qac_report.cells)
    assert lines[0].startswith("study,k,bias_large")


def test_svg_is_well_formed_xml(qac_report):
    payloads = render_report(qac_report)
    for name in ("energies.svg", "gsp.svg"):
        root = ET.fromstring(payloads[name])
        assert root.tag.endswith("svg")


def test_emit_report_writes_requested_formats(tmp_path, qac_report):
    paths = emit_report(qac_report, str(tmp_path), formats=("json", "csv", "svg"))
    names = sorted(p.split("/")[-1] for p in paths)
    assert names == ["energies.svg", "gsp.svg", "report.csv", "report.json"]
    with pytest.raises(InvalidParameterError):
        emit_report(qac_report, str(tmp_path), formats=("pdf",))


SCALING = ExperimentConfig(study="scaling", graph_m=4, k_values=(4,),
                           beta_grid=(1.0,), instances_per_cell=3,
                           num_reads=40, sweeps=200, seed=5)


@pytest.fixture(scope="module")
def scaling_report():
    return run_scaling(SCALING)


def test_scaling_normalized_planted_is_one(scaling_report):
    for c in scaling_report.cells:
        for r in c.records:
            assert r["planted"] / r["planted"] == 1.0
        if c.gsp == 1.0:
            assert c.mean_normalized == 1.0


def test_scaling_reports_instance_sizes(scaling_report):
    sizes = scaling_report.instance_sizes
    assert "k4" in sizes
    assert sizes["k4"]["n_linear"] == 48
    assert sizes["k4"]["reference"] == [1219, 6914]


def test_scaling_read_budgets_match():
    # replication consumes k subsamples per read; the baseline k calls of
    # num_reads reads: identical totals by construction
    k, reads = SCALING.k_values[0], SCALING.num_reads
    assert k * reads == sum(reads for _ in range(k))


def test_gsp_monotone_when_sweeps_collapse(scaling_report):
    starved = run_scaling(config_from_dict({**config_to_dict(SCALING), "sweeps": 1}))
    by_method = {c.method: c.gsp for c in scaling_report.cells}
    starved_by_method = {c.method: c.gsp for c in starved.cells}
    for method, value in starved_by_method.items():
        assert value <= by_method[method]


def test_threaded_run_equals_sequential(qac_report, monkeypatch):
    monkeypatch.setenv("ANNEAL_RBM_THREADS", "4")
    threaded = run_qac_comparison(SMOKE)
    assert report_to_dict(threaded) == report_to_dict(qac_report)


def test_shipped_configs_parse():
    import os
    here = os.path.join(os.path.dirname(__file__), "..", "configs")
    for name in ("qac_m16.json", "scaling_m16.json", "scaling_desk.json"):
        with open(os.path.join(here, name)) as f:
            cfg = config_from_dict(json.load(f))
        assert cfg.instances_per_cell == 10
