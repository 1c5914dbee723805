"""End-to-end detection over one dataset directory.

Seed labels from the official list and user labels, expand by association,
train a forest on what is labeled, flag unlabeled tokens, keep the flags a
naming heuristic confirms, expand again, then find collusion and advance-fee
addresses and measure impact. All outputs are sorted and carry no wall-clock
data, so two runs on the same input write identical bytes.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import forest
from .association import (
    DEFAULT_MIN_GROUP,
    LabelStore,
    add_verified,
    expand_guilt,
    run_collusion,
    seed_ground_truth,
    verification_reasons,
)
from .errors import DegenerateDataset
from .features import N_FEATURES, FeatureExtractor, FeatureVector, write_features_csv
from .impact import DRAIN_FRACTION, MIN_FEE_OCCURRENCES, build_impact_report, detect_advance_fee, market_stats
from .ingest import (
    KEYWORDS_FILE,
    LABELS_FILE,
    OFFICIAL_FILE,
    DataStore,
    load_brand_keywords,
    load_official_tokens,
    load_store,
    load_user_labels,
)
from .model import DEFAULT_VALUABLE_TOKENS, Label, LabelKind, Provenance

log = logging.getLogger(__name__)

LABELS_OUT = "labels_out.csv"
ML_FLAGGED = "ml_flagged.csv"
IMPACT_REPORT = "impact_report.json"
RUG_HISTOGRAM = "rug_histogram.csv"
MARKET_STATS = "market_stats.json"
FEATURES_OUT = "features.csv"
MODEL_OUT = "model.json"


@dataclass
class DetectResult:
    labels: LabelStore
    flagged: list[str] = field(default_factory=list)
    verified: dict[str, str] = field(default_factory=dict)
    scores: dict[str, float] = field(default_factory=dict)
    model: forest.ForestModel | None = None
    report: object = None
    stats: dict = field(default_factory=dict)
    vectors: list[FeatureVector] = field(default_factory=list)


def load_inputs(data_dir) -> tuple[DataStore, list, list[Label], list[str]]:
    d = Path(data_dir)
    store = load_store(d)
    officials = sorted(load_official_tokens(d / OFFICIAL_FILE), key=lambda o: o.address) \
        if (d / OFFICIAL_FILE).exists() else []
    user = load_user_labels(d / LABELS_FILE) if (d / LABELS_FILE).exists() else []
    keywords = load_brand_keywords(d / KEYWORDS_FILE) if (d / KEYWORDS_FILE).exists() else []
    return store, officials, user, keywords


def label_advance_fees(store: DataStore, labels: LabelStore, min_occurrences: int = MIN_FEE_OCCURRENCES) -> int:
    gen = labels.generation + 1
    added = 0
    for token in labels.subjects(LabelKind.SCAM_TOKEN):
        if token not in store.tokens:
            continue
        found = detect_advance_fee(store, token, min_occurrences)
        if found is None:
            continue
        added += labels.add(Label(found.fee_address, LabelKind.ADVANCE_FEE_RECIPIENT, Provenance.ADVANCE_FEE,
                                  evidence=f"skims {found.fraction:.6g} of {found.occurrences} transfers of {token}",
                                  cause=(token, LabelKind.SCAM_TOKEN), generation=gen))
    if added:
        labels.generation = gen
    return added


def detect(store: DataStore, officials, user_labels, keywords, params: forest.Hyperparams | None = None,
           seed: int = 0, jobs: int = 1, valuable=None, thresholds: dict | None = None) -> DetectResult:
    params = params or forest.Hyperparams()
    valuable = frozenset(valuable) if valuable else DEFAULT_VALUABLE_TOKENS
    thresholds = thresholds or {}
    labels = seed_ground_truth(store, officials, user_labels)
    expand_guilt(store, labels)

    fx = FeatureExtractor(store)
    tokens = sorted(store.tokens)
    vectors = {t: fx.extract(t) for t in tokens}
    scam = set(labels.subjects(LabelKind.SCAM_TOKEN))
    official = set(labels.subjects(LabelKind.OFFICIAL_TOKEN))
    train_tokens = [t for t in tokens if t in scam or t in official]
    result = DetectResult(labels)
    try:
        X = np.array([vectors[t].values for t in train_tokens], dtype=np.float64).reshape(-1, N_FEATURES)
        y = np.array([1 if t in scam else 0 for t in train_tokens], dtype=np.int8)
        model = forest.train(X, y, params, seed=seed, jobs=jobs)
    except DegenerateDataset as exc:
        log.warning("classifier skipped: %s", exc)
        model = None
    result.model = model

    if model is not None:
        unlabeled = [t for t in tokens if t not in scam and t not in official]
        if unlabeled:
            pred, score = model.predict_many(np.array([vectors[t].values for t in unlabeled]))
            result.scores = {t: float(s) for t, s in zip(unlabeled, score)}
            result.flagged = [t for t, p in zip(unlabeled, pred) if p == 1]
        result.verified = verification_reasons(store, result.flagged, keywords,
                                               thresholds.get("min_group", DEFAULT_MIN_GROUP))
        add_verified(labels, result.verified)
        expand_guilt(store, labels)

    run_collusion(store, labels, valuable)
    label_advance_fees(store, labels, thresholds.get("min_occurrences", MIN_FEE_OCCURRENCES))
    result.report = build_impact_report(store, labels, valuable, thresholds.get("drain_fraction", DRAIN_FRACTION))
    result.stats = market_stats(store)
    result.vectors = [vectors[t] for t in tokens]
    return result


def _dump_json(path: Path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def write_outputs(out_dir, store: DataStore, result: DetectResult) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result.labels.write_csv(out / LABELS_OUT)
    with open(out / ML_FLAGGED, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("token", "score", "name", "symbol"))
        for t in sorted(set(result.flagged) - set(result.verified)):
            info = store.tokens[t]
            w.writerow((t, repr(result.scores.get(t, 0.0)), info.name, info.symbol))
    _dump_json(out / IMPACT_REPORT, result.report.to_json())
    result.report.write_histogram_csv(out / RUG_HISTOGRAM)
    _dump_json(out / MARKET_STATS, result.stats)
    write_features_csv(out / FEATURES_OUT, result.vectors)
    if result.model is not None:
        (out / MODEL_OUT).write_text(result.model.to_json() + "\n", encoding="utf-8")


def run_detect(data_dir, out_dir, params: forest.Hyperparams | None = None, seed: int = 0,
               jobs: int = 1, thresholds: dict | None = None, valuable=None) -> DetectResult:
    store, officials, user, keywords = load_inputs(data_dir)
    result = detect(store, officials, user, keywords, params, seed, jobs, valuable, thresholds)
    write_outputs(out_dir, store, result)
    return result
