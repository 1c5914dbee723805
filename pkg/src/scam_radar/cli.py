"""Command line entry point: ``scam-radar <subcommand>``.

Exit codes: 0 ok, 1 data error (bad or missing input), 2 config or usage error.
Settings come from an optional TOML file (``--config``); flags win over it and
``SCAM_RADAR_SEED`` is used when neither gives a seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__, forest, kernels
from .errors import ConfigError, NotFound, ScamRadarError
from .features import N_FEATURES, FeatureExtractor, write_features_csv
from .ingest import (
    EVENTS_FILE,
    TRANSFERS_FILE,
    load_store,
    read_events,
    read_transfers,
    validate_replay,
)
from .model import LabelKind

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("scam_radar")

EXIT_OK, EXIT_DATA, EXIT_CONFIG = 0, 1, 2
DEFAULT_SEED = 0


class UsageError(ConfigError):
    pass


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path}: {exc}") from None


def resolve_seed(flag, config: dict) -> int:
    if flag is not None:
        return flag
    if "seed" in config:
        return int(config["seed"])
    env = os.environ.get("SCAM_RADAR_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"SCAM_RADAR_SEED={env!r} is not an integer") from None
    return DEFAULT_SEED


def hyperparams_from(config: dict, args) -> forest.Hyperparams:
    section = dict(config.get("classifier", {}))
    known = {f.name for f in fields(forest.Hyperparams)}
    unknown = set(section) - known
    if unknown:
        raise ConfigError(f"unknown [classifier] keys {sorted(unknown)}")
    if getattr(args, "trees", None) is not None:
        section["n_trees"] = args.trees
    try:
        return forest.Hyperparams(**section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[classifier]: {exc}") from None


def thresholds_from(config: dict) -> dict:
    t = dict(config.get("thresholds", {}))
    allowed = {"drain_fraction": (0.0, 1.0), "min_group": (1, None), "min_occurrences": (1, None)}
    for key, value in t.items():
        if key not in allowed:
            raise ConfigError(f"unknown [thresholds] key {key!r}")
        lo, hi = allowed[key]
        if value < lo or (hi is not None and value > hi):
            raise ConfigError(f"[thresholds] {key}={value} out of range")
    return t


def _jobs(args, config) -> int:
    jobs = args.jobs if args.jobs is not None else int(config.get("jobs", 1))
    if jobs < 1:
        raise UsageError("--jobs must be >= 1")
    return jobs


def read_token_labels(path, tokens) -> np.ndarray:
    """1 for tokens labeled ScamToken in a label or truth CSV, else 0."""
    scam = set()
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            if row.get("kind") == LabelKind.SCAM_TOKEN.value:
                scam.add(row["address"])
    return np.array([1 if t in scam else 0 for t in tokens], dtype=np.int8)


def _matrix(store):
    fx = FeatureExtractor(store)
    tokens = sorted(store.tokens)
    vectors = [fx.extract(t) for t in tokens]
    X = np.array([v.values for v in vectors], dtype=np.float64).reshape(-1, N_FEATURES)
    return tokens, vectors, X


def _dump(path, doc) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


# --------------------------------------------------------------------------- subcommands

def cmd_generate(args, config) -> int:
    from .scenario import GeneratorConfig, audit, generate_market, parse_campaigns, write_market

    section = dict(config.get("generator", {}))
    known = {f.name for f in fields(GeneratorConfig)}
    unknown = set(section) - known
    if unknown:
        raise ConfigError(f"unknown [generator] keys {sorted(unknown)}")
    if args.campaigns is not None:
        section["campaigns"] = parse_campaigns(args.campaigns)
    if args.victims is not None:
        section["victims_mean"] = args.victims
    if args.benign is not None:
        section["benign_tokens"] = args.benign
    section["seed"] = resolve_seed(args.seed, config)
    try:
        gen_config = GeneratorConfig(**section)
    except TypeError as exc:
        raise ConfigError(f"[generator]: {exc}") from None
    market = generate_market(gen_config)
    problems = audit(market)
    if problems:
        raise ScamRadarError("generated market failed its audit: " + "; ".join(problems[:5]))
    write_market(args.out, market)
    print(f"wrote {len(market.store.tokens)} tokens, {len(market.store.pools)} pools, "
          f"{len(market.store.events)} events, {len(market.ledger['pools'])} scam pools to {args.out}")
    return EXIT_OK


def cmd_ingest_check(args, config) -> int:
    d = Path(args.data)
    bad = 0
    for name, reader in ((EVENTS_FILE, read_events), (TRANSFERS_FILE, read_transfers)):
        if not (d / name).exists():
            continue
        res = reader(d / name)
        print(f"{name}: {len(res.records)} records, {len(res.rejects)} rejected")
        for err in res.rejects:
            print(f"  reject: {err}")
        bad += len(res.rejects)
    if bad:
        return EXIT_DATA
    store = load_store(d)
    print(f"tokens={len(store.tokens)} pools={len(store.pools)} study_time={store.study_time}")
    problems = validate_replay(store)
    for p in problems:
        print(f"  replay: {p.event.pool} {p.event.tx_hash}:{p.event.log_index} {p.reason}")
    print(f"replay: {len(problems)} discrepancies")
    return EXIT_DATA if problems else EXIT_OK


def cmd_features(args, config) -> int:
    store = load_store(args.data, require_prices=False)
    tokens, vectors, _ = _matrix(store)
    n = write_features_csv(args.out, vectors)
    print(f"wrote {n} feature rows to {args.out}")
    return EXIT_OK


def _labels_path(args) -> Path:
    return Path(args.labels) if args.labels else Path(args.data) / "truth_labels.csv"


def cmd_train(args, config) -> int:
    params = hyperparams_from(config, args)
    seed = resolve_seed(args.seed, config)
    store = load_store(args.data, require_prices=False)
    tokens, _, X = _matrix(store)
    y = read_token_labels(_labels_path(args), tokens)
    model = forest.train(X, y, params, seed=seed, jobs=_jobs(args, config))
    Path(args.out).write_text(model.to_json() + "\n", encoding="utf-8")
    print(f"trained {len(model.trees)} trees on {len(tokens)} tokens ({int(y.sum())} scam); wrote {args.out}")
    return EXIT_OK


def cmd_eval(args, config) -> int:
    if args.folds < 2:
        raise UsageError("--folds must be >= 2")
    params = hyperparams_from(config, args)
    seed = resolve_seed(args.seed, config)
    store = load_store(args.data, require_prices=False)
    tokens, _, X = _matrix(store)
    y = read_token_labels(_labels_path(args), tokens)
    start = time.perf_counter()
    report = forest.cross_validate(X, y, params, k=args.folds, seed=seed, jobs=_jobs(args, config))
    elapsed = time.perf_counter() - start
    _dump(args.out, report.to_json())
    agg = report.to_json()["aggregate"]
    print(f"{args.folds}-fold CV: precision={agg['precision']:.4f} recall={agg['recall']:.4f} "
          f"f1={agg['f1']:.4f} ({elapsed:.1f}s, {kernels.BACKEND} kernels)")
    return EXIT_OK


def cmd_detect(args, config) -> int:
    from .pipeline import run_detect

    params = hyperparams_from(config, args)
    seed = resolve_seed(args.seed, config)
    result = run_detect(args.data, args.out, params, seed=seed, jobs=_jobs(args, config),
                        thresholds=thresholds_from(config), valuable=config.get("valuable_tokens"))
    agg = result.report.aggregates
    counts = {k.value: len(result.labels.subjects(k)) for k in LabelKind}
    print("labels: " + ", ".join(f"{k}={v}" for k, v in counts.items() if v))
    print(f"classifier flagged {len(result.flagged)}, verified {len(result.verified)}")
    print(f"scam pools={agg['scam_pools']} profit=${agg['total_profit_usd']:,.2f} "
          f"victims={agg['distinct_victims']} rugged<1h={agg['fraction_rugged_within_1h']:.3f} "
          f"rugged<1d={agg['fraction_rugged_within_1d']:.3f}")
    return EXIT_OK


def cmd_report(args, config) -> int:
    from .pipeline import IMPACT_REPORT, LABELS_OUT

    out = Path(args.results)
    with open(out / IMPACT_REPORT, encoding="utf-8") as fh:
        report = json.load(fh)
    agg = report["aggregates"]
    for key in sorted(agg):
        if key != "incomplete_profiles":
            print(f"{key}: {agg[key]}")
    for row in report["rug_histogram"]:
        print(f"  rugged {row['bin']:>6}: {row['count']:5d}  cumulative {row['cumulative_fraction']:.3f}")
    if args.truth:
        from .scenario import read_truth

        truth = {}
        for a, k, _ in read_truth(Path(args.truth) / "truth_labels.csv"):
            truth.setdefault(k, set()).add(a)
        found = {}
        with open(out / LABELS_OUT, encoding="utf-8", newline="") as fh:
            for row in csv.DictReader(fh):
                found.setdefault(LabelKind(row["kind"]), set()).add(row["address"])
        for kind in sorted(truth, key=lambda k: k.value):
            t, f = truth[kind], found.get(kind, set())
            recall = len(t & f) / len(t) if t else 1.0
            print(f"{kind.value}: planted={len(t)} found={len(f)} recall={recall:.4f} extra={len(f - t)}")
        victims_path = Path(args.truth) / "victims.csv"
        if victims_path.exists():
            with open(victims_path, encoding="utf-8") as fh:
                victims = {ln.strip() for ln in fh.readlines()[1:] if ln.strip()}
            flagged = set().union(*found.values()) if found else set()
            print(f"victims flagged: {len(victims & flagged)} of {len(victims)}")
    return EXIT_OK


# --------------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scam-radar", description="Scam token detection on Uniswap V2 style markets.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    p.add_argument("--config", help="TOML config file; flags override it")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, data=True):
        if data:
            sp.add_argument("data", help="dataset directory")
        sp.add_argument("--seed", type=int, help="RNG seed (default: config, $SCAM_RADAR_SEED, then 0)")
        sp.add_argument("--jobs", type=int, help="worker threads for forest training")

    g = sub.add_parser("generate", help="write a seeded synthetic market with truth labels")
    common(g, data=False)
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--campaigns", help="scam campaigns, e.g. rugpull=5,collusion=3 (unlisted kinds: 0)")
    g.add_argument("--victims", type=float, help="mean victims per scam pool")
    g.add_argument("--benign", type=int, help="number of benign tokens")
    g.set_defaults(func=cmd_generate)

    ic = sub.add_parser("ingest-check", help="validate input files and replay every pool")
    ic.add_argument("data")
    ic.set_defaults(func=cmd_ingest_check)

    f = sub.add_parser("features", help="write the per-token feature table")
    f.add_argument("data")
    f.add_argument("--out", default="features.csv")
    f.set_defaults(func=cmd_features)

    for name, func, out, help_ in (("train", cmd_train, "model.json", "train a forest on labeled tokens"),
                                   ("eval", cmd_eval, "eval_report.json", "stratified k-fold evaluation")):
        sp = sub.add_parser(name, help=help_)
        common(sp)
        sp.add_argument("--labels", help="label CSV with address,kind (default: DATA/truth_labels.csv)")
        sp.add_argument("--out", default=out)
        sp.add_argument("--trees", type=int, help="number of trees")
        if name == "eval":
            sp.add_argument("--folds", type=int, default=10)
        sp.set_defaults(func=func)

    d = sub.add_parser("detect", help="run the full detection pipeline")
    common(d)
    d.add_argument("--out", required=True, help="output directory for labels and reports")
    d.add_argument("--trees", type=int, help="number of trees")
    d.set_defaults(func=cmd_detect)

    r = sub.add_parser("report", help="summarize a detect output directory")
    r.add_argument("results", help="detect output directory")
    r.add_argument("--truth", help="generated dataset directory to score against")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config)
        return args.func(args, config)
    except ConfigError as exc:
        print(f"scam-radar {args.command}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ScamRadarError, NotFound, OSError, ValueError) as exc:
        print(f"scam-radar {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
