import json
import os
from pathlib import Path

import numpy as np
import pytest

from plaus import cli
from plaus.cli import (
    CaseRecord,
    ConfigError,
    DanglingCaseIdError,
    ParseError,
    RunConfig,
    UnknownClassNameError,
    default_reliability_grid,
    ingest,
    main,
    read_report,
    reliability_tag,
)

DATA = Path(__file__).parent / "data"


def write_lines(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))
    return str(path)


@pytest.fixture
def small_dataset(tmp_path):
    cases = write_lines(
        tmp_path / "cases.jsonl",
        [
            {"case_id": "a", "classes": ["x", "y", "z"]},
            {"case_id": "b", "num_classes": 3},
        ],
    )
    annotations = write_lines(
        tmp_path / "annotations.jsonl",
        [
            {"case_id": "a", "annotator_id": "r1", "blocks": [["x"], ["y"]]},
            {"case_id": "a", "annotator_id": "r2", "blocks": [["y"]]},
            {"case_id": "b", "annotator_id": "r1", "blocks": [[2], [0]]},
            {"case_id": "b", "annotator_id": "r2", "blocks": [[2]]},
        ],
    )
    predictions = write_lines(
        tmp_path / "predictions.jsonl",
        [
            {"case_id": "a", "ranked_classes": ["x", "y"]},
            {"case_id": "b", "ranked_classes": [2, 1]},
        ],
    )
    return cases, annotations, predictions


# -- ingest -----------------------------------------------------------------


def test_ingest_joins_files_in_case_order(small_dataset):
    cases, annotations, predictions = small_dataset
    records = ingest(cases, annotations, predictions)
    assert [r.case_id for r in records] == ["a", "b"]
    first = records[0]
    assert isinstance(first, CaseRecord)
    assert first.class_space.names == ("x", "y", "z")
    assert first.annotator_ids == ("r1", "r2")
    assert first.rankings[0].blocks == (frozenset({0}), frozenset({1}))
    assert first.prediction.ranked_classes == (0, 1)
    assert records[1].class_space.names is None
    assert records[1].prediction.ranked_classes == (2, 1)


def test_ingest_derm_fixture():
    records = ingest(
        str(DATA / "derm_cases.jsonl"),
        str(DATA / "derm_annotations.jsonl"),
        str(DATA / "derm_predictions_b.jsonl"),
    )
    (record,) = records
    assert record.class_space.size == 8
    assert record.class_space.risk[record.class_space.id_of("Melanoma")] == 2
    assert len(record.rankings) == 6
    assert [len(r.blocks) for r in record.rankings] == [3, 2, 2, 1, 1, 3]
    assert record.prediction.ranked_classes == (1, 5, 2)
    assert record.metadata == {"source": "demo"}


def test_ingest_reports_line_numbers(tmp_path):
    path = tmp_path / "cases.jsonl"
    path.write_text('{"case_id": "a", "num_classes": 2}\n{broken\n')
    with pytest.raises(ParseError, match="cases.jsonl:2"):
        ingest(str(path), str(path))


def test_ingest_rejects_duplicate_cases(tmp_path):
    cases = write_lines(
        tmp_path / "cases.jsonl",
        [{"case_id": "a", "num_classes": 2}, {"case_id": "a", "num_classes": 2}],
    )
    with pytest.raises(ParseError, match="duplicate case id"):
        ingest(cases, cases)


def test_ingest_rejects_unknown_class_names(tmp_path):
    cases = write_lines(tmp_path / "c.jsonl", [{"case_id": "a", "classes": ["x", "y"]}])
    annotations = write_lines(
        tmp_path / "a.jsonl",
        [{"case_id": "a", "annotator_id": "r", "blocks": [["nope"]]}],
    )
    with pytest.raises(UnknownClassNameError, match="nope"):
        ingest(cases, annotations)


def test_ingest_rejects_out_of_range_ids(tmp_path):
    cases = write_lines(tmp_path / "c.jsonl", [{"case_id": "a", "num_classes": 2}])
    annotations = write_lines(
        tmp_path / "a.jsonl", [{"case_id": "a", "annotator_id": "r", "blocks": [[5]]}]
    )
    with pytest.raises(UnknownClassNameError):
        ingest(cases, annotations)


def test_ingest_rejects_dangling_case_ids(tmp_path):
    cases = write_lines(tmp_path / "c.jsonl", [{"case_id": "a", "num_classes": 2}])
    annotations = write_lines(
        tmp_path / "a.jsonl", [{"case_id": "zzz", "annotator_id": "r", "blocks": [[0]]}]
    )
    with pytest.raises(DanglingCaseIdError):
        ingest(cases, annotations)
    predictions = write_lines(
        tmp_path / "p.jsonl", [{"case_id": "zzz", "ranked_classes": [0]}]
    )
    good = write_lines(tmp_path / "a2.jsonl", [])
    with pytest.raises(DanglingCaseIdError):
        ingest(cases, good, predictions)


def test_ingest_rejects_duplicate_annotators_and_predictions(tmp_path):
    cases = write_lines(tmp_path / "c.jsonl", [{"case_id": "a", "num_classes": 2}])
    annotations = write_lines(
        tmp_path / "a.jsonl",
        [
            {"case_id": "a", "annotator_id": "r", "blocks": [[0]]},
            {"case_id": "a", "annotator_id": "r", "blocks": [[1]]},
        ],
    )
    with pytest.raises(ParseError, match="duplicate annotator"):
        ingest(cases, annotations)
    ok = write_lines(
        tmp_path / "a2.jsonl", [{"case_id": "a", "annotator_id": "r", "blocks": [[0]]}]
    )
    predictions = write_lines(
        tmp_path / "p.jsonl",
        [
            {"case_id": "a", "ranked_classes": [0]},
            {"case_id": "a", "ranked_classes": [1]},
        ],
    )
    with pytest.raises(ParseError, match="duplicate prediction"):
        ingest(cases, ok, predictions)


def test_ingest_rejects_risk_without_full_list(tmp_path):
    cases = write_lines(
        tmp_path / "c.jsonl", [{"case_id": "a", "num_classes": 3, "risk": [0, 1]}]
    )
    with pytest.raises(ParseError, match="cover every class"):
        ingest(cases, cases)


# -- configuration ----------------------------------------------------------


def test_run_config_defaults_per_model():
    assert RunConfig(model="prirn").reliability_grid == (10.0, 20.0, 30.0, 50.0, 100.0)
    assert RunConfig(model="pl").reliability_grid == (1, 2, 3, 5, 10)
    assert RunConfig(model="irn").reliability_grid == (None,)
    assert default_reliability_grid("dirichlet-counts") == (10.0, 20.0, 30.0, 50.0, 100.0)


def test_run_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(model="nope")
    with pytest.raises(ConfigError):
        RunConfig(model="prirn", num_samples=0)
    with pytest.raises(ConfigError):
        RunConfig(model="pl", reliability_grid=(1.5,))
    with pytest.raises(ConfigError):
        RunConfig(model="prirn", reliability_grid=(-1.0,))
    with pytest.raises(ConfigError):
        RunConfig(model="prirn", k_grid=())
    with pytest.raises(ConfigError):
        RunConfig(model="gaussian-scores")
    assert RunConfig(model="gaussian-scores", threshold=1.0).threshold == 1.0


def test_gibbs_iteration_budget_retains_exactly_m():
    config = RunConfig(model="pl", num_samples=250, gibbs_burn_in=100, gibbs_thinning=3)
    assert config.gibbs_iterations == 100 + 3 * 250


def test_reliability_tags():
    assert reliability_tag(None) == "point"
    assert reliability_tag(20.0) == "20"
    assert reliability_tag(2) == "2"
    assert reliability_tag(12.5) == "12.5"


def test_case_seeds_are_stable_and_distinct():
    seed = cli._case_seed(7, "case-1", "pl", "2")
    assert seed == cli._case_seed(7, "case-1", "pl", "2")
    others = {
        cli._case_seed(7, "case-2", "pl", "2"),
        cli._case_seed(7, "case-1", "prirn", "2"),
        cli._case_seed(7, "case-1", "pl", "3"),
        cli._case_seed(8, "case-1", "pl", "2"),
    }
    assert seed not in others
    assert len(others) == 4


# -- run --------------------------------------------------------------------


def test_run_writes_reports_and_loo(small_dataset, tmp_path):
    cases, annotations, predictions = small_dataset
    records = ingest(cases, annotations, predictions)
    out = tmp_path / "out"
    config = RunConfig(model="prirn", reliability_grid=(20.0,), num_samples=200)
    manifest = cli.run(config, records, str(out))
    assert manifest["num_failures"] == 0
    report = read_report(str(out))
    metric_rows = report["files"]["metrics_prirn_20.jsonl"]
    names = {r["metric"] for r in metric_rows}
    assert "annotation_certainty_top1" in names
    assert "ua_top1_accuracy" in names
    assert all(r["model"] == "prirn" and r["reliability"] == 20.0 for r in metric_rows)
    loo_rows = report["files"]["loo.jsonl"]
    assert [r["case_id"] for r in loo_rows] == ["a", "b"]
    assert all(r["value"] is not None for r in loo_rows)
    summary = report["files"]["summary_prirn.jsonl"]
    dataset_metrics = {r["metric"] for r in summary}
    assert "loo_agreement" in dataset_metrics
    hist_rows = [r for r in summary if "histogram_counts" in r]
    assert hist_rows and all(sum(r["histogram_counts"]) == 200 for r in hist_rows)


def test_run_flushes_partial_results_on_case_failure(tmp_path):
    cases = write_lines(
        tmp_path / "c.jsonl",
        [
            {"case_id": "good", "num_classes": 2},
            {"case_id": "silent", "num_classes": 2},
        ],
    )
    annotations = write_lines(
        tmp_path / "a.jsonl",
        [
            {"case_id": "good", "annotator_id": "r", "blocks": [[0]]},
            {"case_id": "silent", "annotator_id": "r", "blocks": []},
        ],
    )
    records = ingest(cases, annotations)
    out = tmp_path / "out"
    config = RunConfig(model="irn")
    manifest = cli.run(config, records, str(out))
    assert manifest["num_failures"] == 1
    report = read_report(str(out))
    assert {r["case_id"] for r in report["files"]["metrics_irn_point.jsonl"]} == {"good"}
    (failure,) = report["files"]["failures_irn.jsonl"]
    assert failure["case_id"] == "silent"
    assert failure["error"] == "AllZeroMassError"


def test_run_round_trip_is_lossless(small_dataset, tmp_path):
    cases, annotations, predictions = small_dataset
    records = ingest(cases, annotations, predictions)
    out = tmp_path / "out"
    cli.run(RunConfig(model="irn"), records, str(out))
    report = read_report(str(out))
    for name, rows in report["files"].items():
        raw = (out / name).read_text().splitlines()
        rebuilt = [json.dumps(cli._jsonable(r), sort_keys=True) for r in rows]
        assert rebuilt == raw, name


def test_gaussian_scores_need_scores_on_every_annotation(tmp_path):
    cases = write_lines(tmp_path / "c.jsonl", [{"case_id": "a", "num_classes": 2}])
    annotations = write_lines(
        tmp_path / "a.jsonl",
        [{"case_id": "a", "annotator_id": "r", "blocks": [[0]], "score": 1.0},
         {"case_id": "a", "annotator_id": "s", "blocks": [[0]]}],
    )
    records = ingest(cases, annotations)
    config = RunConfig(model="gaussian-scores", threshold=0.5)
    manifest = cli.run(config, records, str(tmp_path / "out"))
    assert manifest["num_failures"] == 1


def test_worker_pool_output_matches_serial(small_dataset, tmp_path):
    cases, annotations, predictions = small_dataset
    records = ingest(cases, annotations, predictions)
    config = RunConfig(model="prirn", reliability_grid=(10.0, 30.0), num_samples=100)
    cli.run(config, records, str(tmp_path / "serial"), workers=1)
    cli.run(config, records, str(tmp_path / "pooled"), workers=4)
    serial = sorted((tmp_path / "serial").iterdir())
    pooled = sorted((tmp_path / "pooled").iterdir())
    assert [p.name for p in serial] == [p.name for p in pooled]
    for a, b in zip(serial, pooled):
        assert a.read_bytes() == b.read_bytes(), a.name


# -- command line -----------------------------------------------------------


def run_main(argv):
    return main(argv)


def test_certainty_command_exit_zero(small_dataset, tmp_path):
    cases, annotations, _ = small_dataset
    code = run_main(
        [
            "certainty",
            "--cases", cases,
            "--annotations", annotations,
            "--model", "irn",
            "--out-dir", str(tmp_path / "out"),
        ]
    )
    assert code == 0
    assert (tmp_path / "out" / "manifest.json").exists()


def test_evaluate_requires_predictions_for_every_case(small_dataset, tmp_path):
    cases, annotations, _ = small_dataset
    partial = write_lines(
        tmp_path / "partial.jsonl", [{"case_id": "a", "ranked_classes": [0]}]
    )
    code = run_main(
        [
            "evaluate",
            "--cases", cases,
            "--annotations", annotations,
            "--predictions", partial,
            "--model", "irn",
            "--out-dir", str(tmp_path / "out"),
        ]
    )
    assert code == 2


def test_aggregate_writes_posterior_summaries(small_dataset, tmp_path):
    cases, annotations, _ = small_dataset
    code = run_main(
        [
            "aggregate",
            "--cases", cases,
            "--annotations", annotations,
            "--model", "prirn",
            "--reliability", "20",
            "--samples", "100",
            "--out-dir", str(tmp_path / "out"),
        ]
    )
    assert code == 0
    rows = [
        json.loads(line)
        for line in (tmp_path / "out" / "aggregate_prirn_20.jsonl").read_text().splitlines()
    ]
    assert [r["case_id"] for r in rows] == ["a", "b"]
    for row in rows:
        assert len(row["mean"]) == 3
        np.testing.assert_allclose(sum(row["mean"]), 1.0, atol=1e-6)


def test_bad_config_exits_one(small_dataset, tmp_path):
    cases, annotations, _ = small_dataset
    base = ["certainty", "--cases", cases, "--annotations", annotations,
            "--out-dir", str(tmp_path / "out")]
    assert run_main(base + ["--model", "bogus"]) == 1
    assert run_main(base + ["--model", "gaussian-scores"]) == 1
    assert run_main(base + ["--model", "irn", "--k-grid", "zero"]) == 1
    assert run_main(base + ["--model", "irn", "--workers", "0"]) == 1


def test_bad_data_exits_two(tmp_path):
    cases = tmp_path / "cases.jsonl"
    cases.write_text("{not json\n")
    annotations = write_lines(tmp_path / "a.jsonl", [])
    code = run_main(
        [
            "certainty",
            "--cases", str(cases),
            "--annotations", str(annotations),
            "--model", "irn",
            "--out-dir", str(tmp_path / "out"),
        ]
    )
    assert code == 2
    assert run_main(
        [
            "certainty",
            "--cases", str(tmp_path / "missing.jsonl"),
            "--annotations", str(annotations),
            "--model", "irn",
            "--out-dir", str(tmp_path / "out"),
        ]
    ) == 2


def test_output_dir_env_var(small_dataset, tmp_path, monkeypatch):
    cases, annotations, _ = small_dataset
    target = tmp_path / "from-env"
    monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(target))
    code = run_main(
        ["certainty", "--cases", cases, "--annotations", annotations, "--model", "irn"]
    )
    assert code == 0
    assert target.is_dir()


def test_selfcheck_passes_and_hook_fails_it(capsys, monkeypatch):
    assert run_main(["selfcheck", "--seed", "0"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 4
    monkeypatch.setitem(cli._HOOKS, "corrupt_normalization", True)
    assert run_main(["selfcheck", "--seed", "0"]) == 3
    assert "FAIL normalization" in capsys.readouterr().out


def test_simulate_writes_a_dataset(tmp_path):
    out = tmp_path / "sim"
    code = run_main(
        [
            "simulate",
            "--classes", "4",
            "--cases", "5",
            "--annotators", "3",
            "--blocks", "1,1",
            "--seed", "11",
            "--predictions-from-truth",
            "--out-dir", str(out),
        ]
    )
    assert code == 0
    cases = [json.loads(l) for l in (out / "cases.jsonl").read_text().splitlines()]
    annotations = [
        json.loads(l) for l in (out / "annotations.jsonl").read_text().splitlines()
    ]
    truth = [json.loads(l) for l in (out / "truth.jsonl").read_text().splitlines()]
    predictions = [
        json.loads(l) for l in (out / "predictions.jsonl").read_text().splitlines()
    ]
    assert len(cases) == 5 and len(truth) == 5 and len(predictions) == 5
    assert len(annotations) == 15
    for pred, true in zip(predictions, truth):
        order = np.argsort(-np.array(true["true_lambda"]), kind="stable")
        assert pred["ranked_classes"] == order[:4].tolist()
    # the simulated files feed straight back into evaluation
    code = run_main(
        [
            "evaluate",
            "--cases", str(out / "cases.jsonl"),
            "--annotations", str(out / "annotations.jsonl"),
            "--predictions", str(out / "predictions.jsonl"),
            "--model", "irn",
            "--out-dir", str(tmp_path / "eval"),
        ]
    )
    assert code == 0


def test_simulate_validation(tmp_path):
    assert run_main(["simulate", "--classes", "1", "--out-dir", str(tmp_path)]) == 1
    assert (
        run_main(
            [
                "simulate",
                "--classes", "3",
                "--true-lambda", "0.5,0.5",
                "--out-dir", str(tmp_path),
            ]
        )
        == 1
    )
    assert (
        run_main(
            ["simulate", "--classes", "3", "--blocks", "2,2", "--out-dir", str(tmp_path)]
        )
        == 1
    )
