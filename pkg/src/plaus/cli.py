"""Batch front end: files in, reports out.

Subcommands
    aggregate   per-case posterior summaries (mean, sd, top classes)
    certainty   annotation certainty reports across reliability grids
    evaluate    certainty plus uncertainty-adjusted metrics for predictions
    simulate    draw synthetic cases and annotations from known weights
    selfcheck   run the oracle-equivalence suites

Data files are line-delimited JSON. Cases declare the class space, optionally
with names and risk levels; annotations carry blocks of class ids or names
(and optionally a scalar score); predictions carry a ranked class list. All
reports are line-delimited JSON rows plus a run manifest, with every numeric
row carrying its provenance (model, reliability, M, seed). Reruns with the
same inputs and seed are byte-identical, regardless of worker count: each
case derives its seed from the base seed and the case id, and the writer is
the single serialization point.

Exit codes: 0 ok, 1 bad configuration, 2 bad data, 3 selfcheck failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import metrics as metrics_mod
from .irn import AllZeroMassError, irn_aggregate
from .metrics import PredictionSet, summarize_metric
from .pl_gibbs import DEFAULT_REPETITION_GRID, GibbsConfig, gibbs_run
from .pl_likelihood import pl_partial_ranking_log_prob
from .prirn import DEFAULT_GAMMA_GRID, PrIrnModel
from .rankings import ClassSpace, PartialRanking, RankingError
from .samples import PosteriorSamples
from .sim_oracle import (
    SimSpec,
    brute_force_partial_prob,
    grid_posterior_oracle,
    simulate_annotations,
)
from .simple_models import dirichlet_from_counts, score_threshold_certainty

__all__ = [
    "SCHEMA_VERSION",
    "MODELS",
    "ConfigError",
    "DataError",
    "ParseError",
    "UnknownClassNameError",
    "DanglingCaseIdError",
    "RunConfig",
    "CaseRecord",
    "ingest",
    "run",
    "selfcheck",
    "read_report",
    "main",
]

SCHEMA_VERSION = 1
MODELS = ("irn", "prirn", "pl", "dirichlet-counts", "gaussian-scores")
OUTPUT_DIR_ENV = "PLAUS_OUTPUT_DIR"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_SELFCHECK = 3

# Fault-injection switches for exercising the selfcheck failure paths.
_HOOKS = {"corrupt_normalization": False}


class ConfigError(ValueError):
    """Bad flags or an inconsistent run configuration (exit 1)."""


class DataError(ValueError):
    """Bad input data (exit 2)."""


class ParseError(DataError):
    """A record failed to parse; message carries file and line number."""


class UnknownClassNameError(DataError):
    """An annotation or prediction names a class its case does not have."""


class DanglingCaseIdError(DataError):
    """A record references a case id absent from the cases file."""


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class RunConfig:
    """Settings for one model swept over its reliability grid."""

    model: str
    reliability_grid: tuple = ()
    num_samples: int = 1000
    gibbs_burn_in: int = 500
    gibbs_thinning: int = 1
    gibbs_alpha: float = 1.0
    gibbs_beta: float = 1.0
    base_seed: int = 0
    k_grid: tuple[int, ...] = (1, 2, 3)
    overlap_depth: int = 3
    histogram_bins: int = 20
    dirichlet_prior_alpha: float = 0.01
    threshold: float | None = None

    def __post_init__(self) -> None:
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}; choose from {MODELS}")
        grid = self.reliability_grid or default_reliability_grid(self.model)
        object.__setattr__(self, "reliability_grid", tuple(grid))
        if not self.reliability_grid:
            raise ConfigError("reliability grid must be non-empty")
        if self.model == "pl" and any(
            not float(r).is_integer() or r < 1 for r in self.reliability_grid
        ):
            raise ConfigError("pl reliabilities are positive integer repetition counts")
        if self.model in ("prirn", "dirichlet-counts") and any(
            not r > 0 for r in self.reliability_grid
        ):
            raise ConfigError("reliabilities must be positive")
        if self.num_samples < 1:
            raise ConfigError("M must be >= 1")
        if self.gibbs_burn_in < 0 or self.gibbs_thinning < 1:
            raise ConfigError("bad gibbs burn-in or thinning")
        if not (self.gibbs_alpha > 0 and self.gibbs_beta > 0):
            raise ConfigError("gibbs alpha and beta must be positive")
        if not self.k_grid or any(k < 1 for k in self.k_grid):
            raise ConfigError("k grid must be non-empty positive integers")
        if self.overlap_depth < 1:
            raise ConfigError("overlap depth must be >= 1")
        if self.histogram_bins < 1:
            raise ConfigError("histogram bins must be >= 1")
        if self.model == "gaussian-scores" and self.threshold is None:
            raise ConfigError("gaussian-scores needs --threshold")

    @property
    def gibbs_iterations(self) -> int:
        """Sweeps needed so the chain retains exactly M samples."""
        return self.gibbs_burn_in + self.gibbs_thinning * self.num_samples


def default_reliability_grid(model: str) -> tuple:
    if model in ("prirn", "dirichlet-counts"):
        return DEFAULT_GAMMA_GRID
    if model == "pl":
        return DEFAULT_REPETITION_GRID
    return (None,)  # point estimate or score model: no reliability dial


def reliability_tag(value) -> str:
    """Stable short token for file names and seed derivation."""
    if value is None:
        return "point"
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


def _case_seed(base_seed: int, case_id: str, model: str, rel_tag: str) -> int:
    digest = hashlib.sha256(
        f"{base_seed}|{case_id}|{model}|{rel_tag}".encode()
    ).digest()
    return int.from_bytes(digest[:8], "big")


# --------------------------------------------------------------------------
# ingest


@dataclass(frozen=True)
class CaseRecord:
    """One joined evaluation unit."""

    case_id: str
    class_space: ClassSpace
    annotator_ids: tuple[str, ...]
    rankings: tuple[PartialRanking, ...]
    scores: tuple[float | None, ...]
    prediction: PredictionSet | None = None
    metadata: dict = field(default_factory=dict)


def _read_records(path: str):
    try:
        handle = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from None
    with handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: {exc.msg}") from None
            if not isinstance(record, dict):
                raise ParseError(f"{path}:{lineno}: expected an object")
            yield lineno, record


def _require(record: dict, key: str, where: str):
    if key not in record:
        raise ParseError(f"{where}: missing field {key!r}")
    return record[key]


def _parse_class_space(record: dict, where: str) -> ClassSpace:
    names = None
    if "classes" in record:
        names = record["classes"]
        if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
            raise ParseError(f"{where}: 'classes' must be a list of names")
        if len(set(names)) != len(names):
            raise ParseError(f"{where}: class names must be unique")
        size = len(names)
    elif "num_classes" in record:
        size = record["num_classes"]
        if not isinstance(size, int) or size < 1:
            raise ParseError(f"{where}: 'num_classes' must be a positive integer")
    else:
        raise ParseError(f"{where}: need 'classes' or 'num_classes'")
    risk = None
    if "risk" in record:
        raw = record["risk"]
        risk = {}
        if isinstance(raw, list):
            if len(raw) != size:
                raise ParseError(f"{where}: 'risk' list must cover every class")
            items = enumerate(raw)
        elif isinstance(raw, dict):
            items = raw.items()
        else:
            raise ParseError(f"{where}: 'risk' must be a list or object")
        for key, level in items:
            cid = _resolve_class(key, names, size, where)
            if level not in (0, 1, 2):
                raise ParseError(f"{where}: risk level must be 0, 1 or 2")
            risk[cid] = level
    try:
        return ClassSpace(size=size, names=tuple(names) if names else None, risk=risk)
    except ValueError as exc:
        raise ParseError(f"{where}: {exc}") from None


def _resolve_class(token, names, size: int, where: str) -> int:
    if isinstance(token, bool):
        raise ParseError(f"{where}: bad class reference {token!r}")
    if isinstance(token, int):
        if not (0 <= token < size):
            raise UnknownClassNameError(f"{where}: class id {token} outside [0, {size})")
        return token
    if isinstance(token, str):
        if names is None or token not in names:
            raise UnknownClassNameError(f"{where}: unknown class name {token!r}")
        return names.index(token)
    raise ParseError(f"{where}: bad class reference {token!r}")


def ingest(
    cases_path: str,
    annotations_path: str,
    predictions_path: str | None = None,
) -> list[CaseRecord]:
    """Join the input files into case records, keeping case order.

    Raises:
        ParseError: malformed line (message has file and line number).
        UnknownClassNameError: class reference outside the case's space.
        DanglingCaseIdError: annotation or prediction for an unknown case.
    """
    spaces: dict[str, ClassSpace] = {}
    metadata: dict[str, dict] = {}
    order: list[str] = []
    for lineno, record in _read_records(cases_path):
        where = f"{cases_path}:{lineno}"
        case_id = str(_require(record, "case_id", where))
        if case_id in spaces:
            raise ParseError(f"{where}: duplicate case id {case_id!r}")
        spaces[case_id] = _parse_class_space(record, where)
        meta = record.get("metadata", {})
        if not isinstance(meta, dict):
            raise ParseError(f"{where}: 'metadata' must be an object")
        metadata[case_id] = meta
        order.append(case_id)

    annotations: dict[str, list] = {cid: [] for cid in order}
    seen_annotators: dict[str, set] = {cid: set() for cid in order}
    for lineno, record in _read_records(annotations_path):
        where = f"{annotations_path}:{lineno}"
        case_id = str(_require(record, "case_id", where))
        if case_id not in spaces:
            raise DanglingCaseIdError(f"{where}: unknown case id {case_id!r}")
        annotator = str(_require(record, "annotator_id", where))
        if annotator in seen_annotators[case_id]:
            raise ParseError(
                f"{where}: duplicate annotator {annotator!r} for case {case_id!r}"
            )
        seen_annotators[case_id].add(annotator)
        space = spaces[case_id]
        raw_blocks = _require(record, "blocks", where)
        if not isinstance(raw_blocks, list) or not all(
            isinstance(b, list) for b in raw_blocks
        ):
            raise ParseError(f"{where}: 'blocks' must be a list of lists")
        blocks = [
            [_resolve_class(tok, space.names, space.size, where) for tok in b]
            for b in raw_blocks
        ]
        try:
            ranking = PartialRanking(blocks, space)
        except RankingError as exc:
            raise ParseError(f"{where}: {exc}") from None
        score = record.get("score")
        if score is not None and not isinstance(score, (int, float)):
            raise ParseError(f"{where}: 'score' must be a number")
        annotations[case_id].append(
            (annotator, ranking, float(score) if score is not None else None)
        )

    predictions: dict[str, PredictionSet] = {}
    if predictions_path is not None:
        for lineno, record in _read_records(predictions_path):
            where = f"{predictions_path}:{lineno}"
            case_id = str(_require(record, "case_id", where))
            if case_id not in spaces:
                raise DanglingCaseIdError(f"{where}: unknown case id {case_id!r}")
            if case_id in predictions:
                raise ParseError(f"{where}: duplicate prediction for case {case_id!r}")
            space = spaces[case_id]
            raw = _require(record, "ranked_classes", where)
            if not isinstance(raw, list) or not raw:
                raise ParseError(f"{where}: 'ranked_classes' must be a non-empty list")
            ids = [_resolve_class(tok, space.names, space.size, where) for tok in raw]
            try:
                predictions[case_id] = PredictionSet(tuple(ids), case_id=case_id)
            except ValueError as exc:
                raise ParseError(f"{where}: {exc}") from None

    records = []
    for case_id in order:
        entries = annotations[case_id]
        records.append(
            CaseRecord(
                case_id=case_id,
                class_space=spaces[case_id],
                annotator_ids=tuple(a for a, _, _ in entries),
                rankings=tuple(r for _, r, _ in entries),
                scores=tuple(s for _, _, s in entries),
                prediction=predictions.get(case_id),
                metadata=metadata[case_id],
            )
        )
    return records


# --------------------------------------------------------------------------
# sampling per model


def _posterior_for(record: CaseRecord, config: RunConfig, reliability, seed: int) -> PosteriorSamples:
    if not record.rankings or all(not r.blocks for r in record.rankings):
        raise AllZeroMassError("no annotator ranked any class")
    if config.model == "irn":
        lam_hat = irn_aggregate(record.rankings).normalized
        return PosteriorSamples.point_mass(lam_hat, model="irn", seed=seed)
    if config.model == "prirn":
        return PrIrnModel.fit(record.rankings, reliability).sample(
            config.num_samples, seed=seed
        )
    if config.model == "pl":
        gibbs = GibbsConfig(
            alpha=config.gibbs_alpha,
            beta=config.gibbs_beta,
            iterations=config.gibbs_iterations,
            burn_in=config.gibbs_burn_in,
            thinning=config.gibbs_thinning,
            repetitions=int(reliability),
            seed=seed,
        )
        return gibbs_run(record.rankings, gibbs)
    if config.model == "dirichlet-counts":
        counts = np.zeros(record.class_space.size)
        for ranking in record.rankings:
            if ranking.blocks:
                counts[sorted(ranking.blocks[0])] += 1.0
        return dirichlet_from_counts(
            counts,
            gamma=reliability,
            prior_alpha=config.dirichlet_prior_alpha,
            num_samples=config.num_samples,
            seed=seed,
        )
    raise ConfigError(f"model {config.model!r} does not produce plausibility samples")


def _case_metrics(record: CaseRecord, config: RunConfig, reliability, seed: int):
    """All metric values and per-sample vectors for one (case, reliability)."""
    scalars: dict[str, float] = {}
    vectors: dict[str, np.ndarray] = {}

    if config.model == "gaussian-scores":
        scores = [s for s in record.scores if s is not None]
        if len(scores) < len(record.scores) or not scores:
            raise DataError("gaussian-scores needs a score on every annotation")
        scalars["certainty_threshold"] = score_threshold_certainty(
            scores,
            threshold=config.threshold,
            num_samples=config.num_samples,
            seed=seed,
        )
        return scalars, vectors

    posterior = _posterior_for(record, config, reliability, seed)
    arr = posterior.samples
    top1 = arr.argmax(axis=1)

    for j in range(1, min(3, record.class_space.size) + 1):
        name = f"annotation_certainty_top{j}"
        sets = np.sort(np.argsort(-arr, axis=1, kind="stable")[:, :j], axis=1)
        uniq, counts = np.unique(sets, axis=0, return_counts=True)
        modal = uniq[counts.argmax()]
        vectors[name] = np.all(sets == modal, axis=1).astype(float)
        scalars[name] = float(vectors[name].mean())

    if record.prediction is not None:
        pred = record.prediction
        for k in config.k_grid:
            if k > len(pred.ranked_classes) or k > record.class_space.size:
                continue
            hits = metrics_mod.ua_topk_hits(posterior, pred, k)
            vectors[f"ua_top{k}_accuracy"] = hits
            scalars[f"ua_top{k}_accuracy"] = float(hits.mean())
            set_hits = metrics_mod.ua_set_hits(posterior, pred, k)
            vectors[f"ua_set{k}_accuracy"] = set_hits
            scalars[f"ua_set{k}_accuracy"] = float(set_hits.mean())
        depth = config.overlap_depth
        if depth <= len(pred.ranked_classes) and depth <= record.class_space.size:
            curve = metrics_mod._overlap_curve(posterior, pred, depth)
            vectors["ua_average_overlap"] = curve.mean(axis=0)
            scalars["ua_average_overlap"] = float(curve.mean())

    if record.class_space.risk is not None:
        risk = metrics_mod.risk_metrics(posterior, record.class_space, record.prediction)
        scalars["risk_certainty"] = risk["risk_certainty"]
        scalars["expected_risk_mean"] = risk["expected_risk_mean"]
        scalars["expected_risk_min"] = risk["expected_risk_min"]
        scalars["expected_risk_max"] = risk["expected_risk_max"]
        risk_vec = np.array(
            [record.class_space.risk[c] for c in range(record.class_space.size)],
            dtype=float,
        )
        pooled = np.stack([arr[:, risk_vec == lv].sum(axis=1) for lv in range(3)], axis=1)
        top_level = pooled.argmax(axis=1)
        vectors["risk_certainty"] = (top_level == risk["top_risk_level"]).astype(float)
        vectors["expected_risk_mean"] = arr @ risk_vec
        if record.prediction is not None:
            scalars["ua_risk_match"] = risk["ua_risk_match"]

    return scalars, vectors


def _compute_case(payload):
    record, config, include_aggregate = payload
    out = {}
    aggregates = {}
    failures = []
    for reliability in config.reliability_grid:
        tag = reliability_tag(reliability)
        seed = _case_seed(config.base_seed, record.case_id, config.model, tag)
        try:
            scalars, vectors = _case_metrics(record, config, reliability, seed)
            out[tag] = (scalars, vectors, seed)
            if include_aggregate and config.model != "gaussian-scores":
                posterior = _posterior_for(record, config, reliability, seed)
                arr = posterior.samples
                aggregates[tag] = {
                    "mean": arr.mean(axis=0),
                    "sd": arr.std(axis=0, ddof=0),
                    "seed": seed,
                }
        except (DataError, AllZeroMassError, RankingError, ValueError) as exc:
            failures.append(
                {
                    "case_id": record.case_id,
                    "model": config.model,
                    "reliability": reliability,
                    "error": type(exc).__name__,
                    "message": str(exc),
                }
            )
    return record.case_id, out, aggregates, failures


# --------------------------------------------------------------------------
# report writing


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


def _write_rows(path: str, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for row in rows:
            handle.write(json.dumps(_jsonable(row), sort_keys=True) + "\n")


def _write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n")


def read_report(directory: str) -> dict:
    """Read a report directory back into memory (manifest plus row files)."""
    out = {"manifest": None, "files": {}}
    for name in sorted(os.listdir(directory)):
        path = os.path.join(directory, name)
        if name == "manifest.json":
            with open(path, encoding="utf-8") as handle:
                out["manifest"] = json.load(handle)
        elif name.endswith(".jsonl"):
            with open(path, encoding="utf-8") as handle:
                out["files"][name] = [json.loads(line) for line in handle if line.strip()]
    return out


def run(
    config: RunConfig,
    records: list[CaseRecord],
    out_dir: str,
    workers: int = 1,
    include_aggregate: bool = False,
) -> dict:
    """Sweep one model over its reliability grid and write reports.

    Writes, inside ``out_dir``: one ``metrics_<model>_<rel>.jsonl`` per
    reliability with per-case metric rows, a ``summary.jsonl`` of dataset
    rows (mean, across-sample sd, histogram), optionally
    ``aggregate_<model>_<rel>.jsonl`` posterior summaries, a
    ``failures.jsonl`` when cases failed, and ``manifest.json``.

    Cases are processed by a worker pool; output depends only on inputs and
    the base seed, not on worker count. Returns the manifest.
    """
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    os.makedirs(out_dir, exist_ok=True)
    payloads = [(record, config, include_aggregate) for record in records]
    if workers == 1 or len(records) <= 1:
        results = [_compute_case(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_compute_case, payloads))
    by_case = {case_id: (out, agg) for case_id, out, agg, _ in results}
    failures = [f for _, _, _, fails in results for f in fails]

    summary_rows = []
    written_files = []
    for reliability in config.reliability_grid:
        tag = reliability_tag(reliability)
        provenance = {
            "model": config.model,
            "reliability": reliability,
            "M": 1 if config.model == "irn" else config.num_samples,
            "schema_version": SCHEMA_VERSION,
        }
        case_rows = []
        vector_stacks: dict[str, list] = {}
        scalar_stacks: dict[str, list] = {}
        vector_case_ids: dict[str, list] = {}
        for record in records:
            out, _ = by_case[record.case_id]
            if tag not in out:
                continue
            scalars, vectors, seed = out[tag]
            for metric in sorted(scalars):
                case_rows.append(
                    {
                        **provenance,
                        "case_id": record.case_id,
                        "metric": metric,
                        "value": scalars[metric],
                        "seed": seed,
                    }
                )
                scalar_stacks.setdefault(metric, []).append(scalars[metric])
            for metric, vec in vectors.items():
                vector_stacks.setdefault(metric, []).append(vec)
                vector_case_ids.setdefault(metric, []).append(record.case_id)
        metrics_path = os.path.join(out_dir, f"metrics_{config.model}_{tag}.jsonl")
        _write_rows(metrics_path, case_rows)
        written_files.append(os.path.basename(metrics_path))

        for metric in sorted(scalar_stacks):
            row = {
                **provenance,
                "scope": "dataset",
                "metric": metric,
                "mean": float(np.mean(scalar_stacks[metric])),
                "num_cases": len(scalar_stacks[metric]),
                "seed": config.base_seed,
            }
            stacks = vector_stacks.get(metric)
            if stacks is not None and len({v.size for v in stacks}) == 1:
                report = summarize_metric(
                    metric,
                    vector_case_ids[metric],
                    np.vstack(stacks),
                    bins=config.histogram_bins,
                    provenance=provenance,
                )
                row["sample_sd"] = report.sample_sd
                row["histogram_counts"] = report.histogram_counts
                row["histogram_edges"] = report.histogram_edges
            summary_rows.append(row)

    # Annotation-only agreement, identical for every reliability.
    loo_rows = []
    for record in records:
        if len(record.rankings) >= 2:
            try:
                value = metrics_mod.loo_agreement(record.rankings)
            except ValueError:
                value = None
        else:
            value = None
        loo_rows.append(
            {
                "schema_version": SCHEMA_VERSION,
                "case_id": record.case_id,
                "metric": "loo_agreement",
                "value": value,
                "num_annotators": len(record.rankings),
            }
        )
    loo_path = os.path.join(out_dir, "loo.jsonl")
    _write_rows(loo_path, loo_rows)
    written_files.append("loo.jsonl")
    loo_values = [r["value"] for r in loo_rows if r["value"] is not None]
    if loo_values:
        summary_rows.append(
            {
                "schema_version": SCHEMA_VERSION,
                "scope": "dataset",
                "model": "annotations",
                "reliability": None,
                "metric": "loo_agreement",
                "mean": float(np.mean(loo_values)),
                "num_cases": len(loo_values),
                "M": None,
                "seed": config.base_seed,
            }
        )

    summary_path = os.path.join(out_dir, f"summary_{config.model}.jsonl")
    _write_rows(summary_path, summary_rows)
    written_files.append(os.path.basename(summary_path))

    if include_aggregate:
        for reliability in config.reliability_grid:
            tag = reliability_tag(reliability)
            rows = []
            for record in records:
                _, agg = by_case[record.case_id]
                if tag not in agg:
                    continue
                entry = agg[tag]
                order = np.argsort(-entry["mean"], kind="stable")[:5]
                rows.append(
                    {
                        "schema_version": SCHEMA_VERSION,
                        "case_id": record.case_id,
                        "model": config.model,
                        "reliability": reliability,
                        "M": 1 if config.model == "irn" else config.num_samples,
                        "seed": entry["seed"],
                        "mean": entry["mean"],
                        "sd": entry["sd"],
                        "top_classes": order,
                    }
                )
            path = os.path.join(out_dir, f"aggregate_{config.model}_{tag}.jsonl")
            _write_rows(path, rows)
            written_files.append(os.path.basename(path))

    if failures:
        failures_path = os.path.join(out_dir, f"failures_{config.model}.jsonl")
        _write_rows(failures_path, failures)
        written_files.append(os.path.basename(failures_path))

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "model": config.model,
        "reliability_grid": list(config.reliability_grid),
        "M": config.num_samples,
        "base_seed": config.base_seed,
        "k_grid": list(config.k_grid),
        "overlap_depth": config.overlap_depth,
        "histogram_bins": config.histogram_bins,
        "num_cases": len(records),
        "num_failures": len(failures),
        "files": sorted(set(written_files)),
    }
    return manifest


def _run_models(models, records, out_dir, workers, args, include_aggregate=False) -> int:
    manifests = []
    for model in models:
        config = _config_for(model, args)
        manifests.append(
            run(
                config,
                records,
                out_dir,
                workers=workers,
                include_aggregate=include_aggregate,
            )
        )
    _write_json(
        os.path.join(out_dir, "manifest.json"),
        {
            "schema_version": SCHEMA_VERSION,
            "models": manifests,
            "num_cases": len(records),
        },
    )
    if any(m["num_failures"] for m in manifests):
        return EXIT_DATA
    return EXIT_OK


# --------------------------------------------------------------------------
# selfcheck


def selfcheck(seed: int = 0, verbose: bool = True) -> list[tuple[str, bool, str]]:
    """Run the oracle-equivalence suites; returns (name, passed, detail)."""
    results = []
    rng = np.random.default_rng(seed)

    worst = 0.0
    for _ in range(80):
        k = int(rng.integers(2, 7))
        space = ClassSpace(size=k)
        lam = rng.uniform(0.05, 4.0, size=k)
        ranking = _random_ranking(rng, space, max_block=3)
        dp = float(np.exp(pl_partial_ranking_log_prob(lam, ranking)))
        bf = brute_force_partial_prob(lam, ranking)
        worst = max(worst, abs(dp - bf))
    results.append(("dp_vs_enumeration", worst < 1e-10, f"worst abs diff {worst:.2e}"))

    space = ClassSpace(size=2)
    ranking = PartialRanking([[0], [1]], space)
    oracle = grid_posterior_oracle([ranking], alpha=1.0, resolution=1500)
    posterior = gibbs_run(
        [ranking], GibbsConfig(iterations=4500, burn_in=500, seed=seed + 1)
    )
    gap = float(np.max(np.abs(posterior.samples.mean(axis=0) - oracle.mean)))
    results.append(("gibbs_vs_grid", gap < 0.025, f"max mean gap {gap:.4f}"))

    worst = 0.0
    for _ in range(20):
        k = int(rng.integers(3, 8))
        lam = rng.dirichlet(np.ones(k))
        point = PosteriorSamples.point_mass(lam, model="irn")
        pred = PredictionSet(tuple(int(c) for c in rng.permutation(k)[:3]))
        order = np.argsort(-lam, kind="stable")
        det_top = 1.0 if order[0] in pred.ranked_classes[:2] else 0.0
        ua_top = metrics_mod.ua_topk_accuracy(point, pred, 2)
        det_ao = np.mean(
            [
                metrics_mod.overlap(pred.ranked_classes[:k2], order[:k2])
                for k2 in range(1, 3)
            ]
        )
        ua_ao = metrics_mod.ua_average_overlap(point, pred, 2)
        worst = max(worst, abs(ua_top - det_top), abs(ua_ao - det_ao))
    results.append(("reduction_law", worst < 1e-12, f"worst abs diff {worst:.2e}"))

    space3 = ClassSpace(size=3)
    sample_sets = [
        PrIrnModel.fit([PartialRanking([[0], [1]], space3)], gamma=20.0).sample(
            200, seed=seed + 2
        ),
        gibbs_run(
            [PartialRanking([[0], [1]], space3)],
            GibbsConfig(iterations=700, burn_in=500, seed=seed + 3),
        ),
    ]
    worst = 0.0
    for ps in sample_sets:
        arr = ps.samples.copy()
        if _HOOKS["corrupt_normalization"]:
            arr = arr * 1.01
        worst = max(worst, float(np.max(np.abs(arr.sum(axis=1) - 1.0))))
    results.append(("normalization", worst < 1e-9, f"worst row-sum deviation {worst:.2e}"))

    if verbose:
        for name, passed, detail in results:
            print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
    return results


def _random_ranking(rng, space: ClassSpace, max_block: int = 3) -> PartialRanking:
    ids = rng.permutation(space.size)
    budget = int(rng.integers(1, space.size + 1))
    blocks = []
    start = 0
    while start < budget:
        size = int(rng.integers(1, min(max_block, budget - start) + 1))
        blocks.append(ids[start : start + size].tolist())
        start += size
    return PartialRanking(blocks, space)


# --------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); config errors are exit 1
        raise ConfigError(message)


def _add_common(parser, with_predictions: bool) -> None:
    parser.add_argument("--cases", required=True, help="cases file (jsonl)")
    parser.add_argument("--annotations", required=True, help="annotations file (jsonl)")
    if with_predictions:
        parser.add_argument("--predictions", required=True, help="predictions file (jsonl)")
    parser.add_argument(
        "--model",
        default="prirn,pl",
        help="comma-separated models: " + ", ".join(MODELS),
    )
    parser.add_argument(
        "--reliability",
        default=None,
        help="comma-separated reliability grid (default depends on the model)",
    )
    parser.add_argument("--samples", type=int, default=1000, help="Monte Carlo samples M")
    parser.add_argument("--gibbs-burn-in", type=int, default=500)
    parser.add_argument("--gibbs-thinning", type=int, default=1)
    parser.add_argument("--gibbs-alpha", type=float, default=1.0)
    parser.add_argument("--gibbs-beta", type=float, default=1.0)
    parser.add_argument("--seed", type=int, default=0, help="base seed")
    parser.add_argument("--k-grid", default="1,2,3", help="comma-separated top-k cutoffs")
    parser.add_argument("--overlap-depth", type=int, default=3)
    parser.add_argument("--bins", type=int, default=20, help="histogram bins")
    parser.add_argument("--threshold", type=float, default=None, help="score threshold")
    parser.add_argument(
        "--dirichlet-prior-alpha", type=float, default=0.01, help="counts model prior"
    )
    parser.add_argument("--workers", type=int, default=1, help="worker pool size")
    parser.add_argument(
        "--out-dir",
        default=None,
        help=f"output directory (default ${OUTPUT_DIR_ENV} or ./plaus_out)",
    )


def _split_csv(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _parse_grid(text: str | None, model: str):
    if text is None or model in ("irn", "gaussian-scores"):
        return default_reliability_grid(model)
    values = []
    for token in _split_csv(text):
        try:
            value = float(token)
        except ValueError:
            raise ConfigError(f"bad reliability value {token!r}") from None
        values.append(int(value) if value.is_integer() else value)
    return tuple(values)


def _config_for(model: str, args) -> RunConfig:
    try:
        k_grid = tuple(int(k) for k in _split_csv(args.k_grid))
    except ValueError:
        raise ConfigError(f"bad k grid {args.k_grid!r}") from None
    return RunConfig(
        model=model,
        reliability_grid=_parse_grid(args.reliability, model),
        num_samples=args.samples,
        gibbs_burn_in=args.gibbs_burn_in,
        gibbs_thinning=args.gibbs_thinning,
        gibbs_alpha=args.gibbs_alpha,
        gibbs_beta=args.gibbs_beta,
        base_seed=args.seed,
        k_grid=k_grid,
        overlap_depth=args.overlap_depth,
        histogram_bins=args.bins,
        dirichlet_prior_alpha=args.dirichlet_prior_alpha,
        threshold=args.threshold,
    )


def _out_dir(args) -> str:
    return args.out_dir or os.environ.get(OUTPUT_DIR_ENV) or "plaus_out"


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="plaus", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("aggregate", help="write per-case posterior summaries")
    _add_common(p, with_predictions=False)

    p = sub.add_parser("certainty", help="annotation certainty reports")
    _add_common(p, with_predictions=False)

    p = sub.add_parser("evaluate", help="certainty plus prediction metrics")
    _add_common(p, with_predictions=True)

    p = sub.add_parser("simulate", help="write synthetic cases and annotations")
    p.add_argument("--classes", type=int, required=True, help="classes per case")
    p.add_argument("--cases", type=int, default=10, help="number of cases")
    p.add_argument("--annotators", type=int, default=3)
    p.add_argument("--blocks", default="1,1", help="comma-separated block sizes")
    p.add_argument(
        "--true-lambda",
        default=None,
        help="comma-separated weights shared by all cases (default: drawn per case)",
    )
    p.add_argument(
        "--lambda-alpha",
        type=float,
        default=1.0,
        help="Dirichlet concentration for drawn weights",
    )
    p.add_argument("--sharpness", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--predictions-from-truth",
        action="store_true",
        help="also write predictions ranked by the true weights",
    )
    p.add_argument("--out-dir", default=None)

    p = sub.add_parser("selfcheck", help="run the oracle-equivalence suites")
    p.add_argument("--seed", type=int, default=0)

    return parser


def _cmd_reports(args, with_predictions: bool, include_aggregate: bool) -> int:
    models = _split_csv(args.model)
    for model in models:
        if model not in MODELS:
            raise ConfigError(f"unknown model {model!r}; choose from {MODELS}")
    records = ingest(
        args.cases,
        args.annotations,
        getattr(args, "predictions", None) if with_predictions else None,
    )
    if with_predictions:
        missing = [r.case_id for r in records if r.prediction is None]
        if missing:
            raise DataError(f"no prediction for cases {missing}")
    if args.workers < 1:
        raise ConfigError("workers must be >= 1")
    return _run_models(
        models, records, _out_dir(args), args.workers, args, include_aggregate
    )


def _cmd_simulate(args) -> int:
    if args.classes < 2:
        raise ConfigError("need at least two classes")
    if args.cases < 1:
        raise ConfigError("need at least one case")
    try:
        block_sizes = tuple(int(s) for s in _split_csv(args.blocks))
    except ValueError:
        raise ConfigError(f"bad block sizes {args.blocks!r}") from None
    shared_lambda = None
    if args.true_lambda is not None:
        try:
            shared_lambda = tuple(float(v) for v in _split_csv(args.true_lambda))
        except ValueError:
            raise ConfigError(f"bad weights {args.true_lambda!r}") from None
        if len(shared_lambda) != args.classes:
            raise ConfigError("--true-lambda length must match --classes")
    out_dir = _out_dir(args)
    os.makedirs(out_dir, exist_ok=True)

    case_rows, annotation_rows, truth_rows, prediction_rows = [], [], [], []
    for index in range(args.cases):
        case_id = f"sim-{index:04d}"
        seed = _case_seed(args.seed, case_id, "simulate", "0")
        rng = np.random.default_rng(seed)
        if shared_lambda is not None:
            lam = np.asarray(shared_lambda)
        else:
            lam = rng.dirichlet(np.full(args.classes, args.lambda_alpha))
            lam = np.maximum(lam, 1e-12)
        try:
            spec = SimSpec(
                true_lambda=tuple(lam),
                num_annotators=args.annotators,
                block_sizes=block_sizes,
                sharpness=args.sharpness,
                seed=int(rng.integers(2**63)),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        rankings = simulate_annotations(spec)
        case_rows.append({"case_id": case_id, "num_classes": args.classes})
        for a, ranking in enumerate(rankings):
            annotation_rows.append(
                {
                    "case_id": case_id,
                    "annotator_id": f"sim-annotator-{a}",
                    "blocks": [sorted(b) for b in ranking.blocks],
                }
            )
        truth_rows.append({"case_id": case_id, "true_lambda": lam})
        if args.predictions_from_truth:
            order = np.argsort(-lam, kind="stable")
            prediction_rows.append(
                {"case_id": case_id, "ranked_classes": order[: min(5, args.classes)]}
            )

    _write_rows(os.path.join(out_dir, "cases.jsonl"), case_rows)
    _write_rows(os.path.join(out_dir, "annotations.jsonl"), annotation_rows)
    _write_rows(os.path.join(out_dir, "truth.jsonl"), truth_rows)
    if prediction_rows:
        _write_rows(os.path.join(out_dir, "predictions.jsonl"), prediction_rows)
    _write_json(
        os.path.join(out_dir, "manifest.json"),
        {
            "schema_version": SCHEMA_VERSION,
            "command": "simulate",
            "num_cases": args.cases,
            "num_classes": args.classes,
            "annotators": args.annotators,
            "block_sizes": list(block_sizes),
            "sharpness": args.sharpness,
            "base_seed": args.seed,
        },
    )
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "selfcheck":
            results = selfcheck(seed=args.seed)
            return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_SELFCHECK
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "aggregate":
            return _cmd_reports(args, with_predictions=False, include_aggregate=True)
        if args.command == "certainty":
            return _cmd_reports(args, with_predictions=False, include_aggregate=False)
        if args.command == "evaluate":
            return _cmd_reports(args, with_predictions=True, include_aggregate=False)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
