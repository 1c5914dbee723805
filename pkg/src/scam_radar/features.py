"""Per-token behavioural features over a token's pools.

Forty features in four groups: time-series (active period and relative time
position of each event class), transaction counts and ratios, investor
features (how experienced a token's participants are), and pool-level volume
and liquidity. Missing values use the sentinel -1.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable

from .errors import NotFound
from .ingest import DataStore
from .model import EventKind, PoolEvent

MISSING = -1.0
TRACKING_THRESHOLD_USD = 1.0

FEATURE_NAMES = (
    # time-series
    "T_period", "T_interval", "P_mint", "P_swap", "P_swapfrom", "P_swapto", "P_burn",
    # transaction
    "N_TxU", "N_TxE", "N_mint", "N_swap", "N_swapto", "N_swapfrom", "RE_swapfrom_swapto", "N_burn",
    "A_mint", "A_swap", "A_swapto", "A_swapfrom", "A_burn", "A_all",
    "RE_mint_all", "RE_swap_all", "RE_swapto_all", "RE_swapfrom_all", "RE_burn_all",
    "RA_mint_all", "RA_swap_all", "RA_swapto_all", "RA_swapfrom_all", "RA_burn_all",
    # investor
    "L_mintburn", "L_swap", "C_mintburn", "C_swap",
    # pool level
    "N_pool", "V_token", "V_tracked", "V_untracked", "N_liquidity",
)
N_FEATURES = len(FEATURE_NAMES)
FEATURE_INDEX = {name: i for i, name in enumerate(FEATURE_NAMES)}

EVENT_CLASSES = ("mint", "swap", "swapfrom", "swapto", "burn")


@dataclass(frozen=True)
class FeatureVector:
    token: str
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != N_FEATURES:
            raise ValueError(f"expected {N_FEATURES} values, got {len(self.values)}")

    def __getitem__(self, name: str) -> float:
        return self.values[FEATURE_INDEX[name]]

    def as_dict(self) -> dict[str, float]:
        return dict(zip(FEATURE_NAMES, self.values))


@dataclass(frozen=True)
class TokenTimeline:
    token: str
    events: tuple[PoolEvent, ...]
    t_start: int
    t_end: int
    study_time: int


def time_position(timestamps: Iterable[int], t_start: int, t_end: int) -> float:
    """Mean relative position of ``timestamps`` inside ``[t_start, t_end]``.

    -1 for an empty class, 0 when the window has zero length.
    """
    ts = list(timestamps)
    if not ts:
        return MISSING
    if t_end == t_start:
        return 0.0
    return sum(t - t_start for t in ts) / (len(ts) * (t_end - t_start))


def classify_events(store: DataStore, token: str) -> dict[str, list[PoolEvent]]:
    """Split a token's pool events into the five event classes."""
    out: dict[str, list[PoolEvent]] = {c: [] for c in EVENT_CLASSES}
    for pool in store.token_pools(token):
        side = store.pools[pool].side_of(token)
        for e in store.pool_events(pool):
            if e.kind is EventKind.MINT:
                out["mint"].append(e)
            elif e.kind is EventKind.BURN:
                out["burn"].append(e)
            else:
                out["swap"].append(e)
                token_in = e.amount0_in if side == 0 else e.amount1_in
                out["swapfrom" if token_in > 0 else "swapto"].append(e)
    return out


def _ratio(num: int, den: int) -> float:
    return num / den if den else MISSING


def _mean(values: list[int]) -> float:
    return sum(values) / len(values) if values else MISSING


class FeatureExtractor:
    """Computes feature vectors; store-wide participant and pool statistics are cached."""

    def __init__(self, store: DataStore):
        self.store = store
        mb_pools = defaultdict(set)
        swap_pools = defaultdict(set)
        mb_count: dict[str, int] = defaultdict(int)
        swap_count: dict[str, int] = defaultdict(int)
        for e in store.events:
            if e.kind is EventKind.SWAP:
                swap_pools[e.initiator].add(e.pool)
                swap_count[e.initiator] += 1
            else:
                mb_pools[e.initiator].add(e.pool)
                mb_count[e.initiator] += 1
        self._mb_pools = {a: len(p) for a, p in mb_pools.items()}
        self._swap_pools = {a: len(p) for a, p in swap_pools.items()}
        self._mb_count = dict(mb_count)
        self._swap_count = dict(swap_count)
        self._pool_usd: dict[str, list[float]] = {}
        self._pool_tracked: dict[str, bool] = {}
        for pool in store.pools:
            self._pool_usd[pool] = [self.swap_usd(pool, e) for e in store.pool_events(pool)
                                    if e.kind is EventKind.SWAP]
            self._pool_tracked[pool] = self.pool_liquidity_usd(pool) >= TRACKING_THRESHOLD_USD

    def swap_usd(self, pool: str, e: PoolEvent) -> float:
        """USD size of a swap: the larger of its priced legs, 0 when neither side is priced."""
        info = self.store.pools[pool]
        legs = ((info.token0, e.amount0_in + e.amount0_out), (info.token1, e.amount1_in + e.amount1_out))
        best = 0.0
        for token, amount in legs:
            price = self.store.prices.get(token)
            if price is not None:
                best = max(best, amount / 10 ** self.store.decimals(token) * price)
        return best

    def pool_swap_usd(self, pool: str) -> list[float]:
        return self._pool_usd[pool]

    def pool_liquidity_usd(self, pool: str) -> float:
        info = self.store.pools[pool]
        r0 = r1 = 0
        for e in self.store.pool_events(pool):
            r0 += e.amount0_in - e.amount0_out
            r1 += e.amount1_in - e.amount1_out
        priced = []
        for token, reserve in ((info.token0, r0), (info.token1, r1)):
            price = self.store.prices.get(token)
            if price is not None:
                priced.append(reserve / 10 ** self.store.decimals(token) * price)
        if not priced:
            return 0.0
        if len(priced) == 1:
            return 2 * priced[0]
        return priced[0] + priced[1]

    def timeline(self, token: str) -> TokenTimeline:
        evs = sorted((e for p in self.store.token_pools(token) for e in self.store.pool_events(p)),
                     key=lambda e: e.key)
        if evs:
            return TokenTimeline(token, tuple(evs), evs[0].timestamp, evs[-1].timestamp, self.store.study_time)
        return TokenTimeline(token, (), 0, 0, self.store.study_time)

    def extract(self, token: str) -> FeatureVector:
        store = self.store
        if token not in store.tokens:
            raise NotFound(f"unknown token {token}")
        pools = store.token_pools(token)
        decimals = store.tokens[token].decimals
        classes = classify_events(store, token)
        all_events = classes["mint"] + classes["burn"] + classes["swap"]

        if all_events:
            t_start = min(e.timestamp for e in all_events)
            t_end = max(e.timestamp for e in all_events)
            t_period = float(t_end - t_start)
            t_interval = float(store.study_time - t_end)
        else:
            t_start = t_end = 0
            t_period = t_interval = MISSING
        positions = [time_position((e.timestamp for e in classes[c]), t_start, t_end) for c in EVENT_CLASSES]

        n = {c: len(classes[c]) for c in EVENT_CLASSES}
        n_txu = len(all_events)
        n_txe = len({t.tx_hash for t in store.transfers_by_token.get(token, ())})
        addrs = {c: {e.initiator for e in classes[c]} for c in EVENT_CLASSES}
        a_all = len({e.initiator for e in all_events})
        a = {c: len(addrs[c]) for c in EVENT_CLASSES}

        mb_people = sorted(addrs["mint"] | addrs["burn"])
        swap_people = sorted(addrs["swap"])

        v_token_units = 0
        for pool in pools:
            side = store.pools[pool].side_of(token)
            for e in store.pool_events(pool):
                if e.kind is EventKind.SWAP:
                    v_token_units += (e.amount0_in + e.amount0_out) if side == 0 else (e.amount1_in + e.amount1_out)
        liquidity_units = sum((e.amount0_in if store.pools[e.pool].side_of(token) == 0 else e.amount1_in)
                              for e in classes["mint"])
        v_untracked = math.fsum(v for p in pools for v in self._pool_usd[p])
        v_tracked = math.fsum(v for p in pools if self._pool_tracked[p] for v in self._pool_usd[p])

        values = (
            t_period, t_interval, *positions,
            float(n_txu), float(n_txe), float(n["mint"]), float(n["swap"]), float(n["swapto"]),
            float(n["swapfrom"]), _ratio(n["swapfrom"], n["swapto"]), float(n["burn"]),
            float(a["mint"]), float(a["swap"]), float(a["swapto"]), float(a["swapfrom"]), float(a["burn"]),
            float(a_all),
            _ratio(n["mint"], n_txu), _ratio(n["swap"], n_txu), _ratio(n["swapto"], n_txu),
            _ratio(n["swapfrom"], n_txu), _ratio(n["burn"], n_txu),
            _ratio(a["mint"], a_all), _ratio(a["swap"], a_all), _ratio(a["swapto"], a_all),
            _ratio(a["swapfrom"], a_all), _ratio(a["burn"], a_all),
            _mean([self._mb_pools[x] for x in mb_people]),
            _mean([self._swap_pools[x] for x in swap_people]),
            _mean([self._mb_count[x] for x in mb_people]),
            _mean([self._swap_count[x] for x in swap_people]),
            float(len(pools)),
            v_token_units / 10**decimals,
            v_tracked,
            v_untracked,
            liquidity_units / 10**decimals,
        )
        return FeatureVector(token, tuple(values))


def extract_features(store: DataStore, token: str) -> FeatureVector:
    return FeatureExtractor(store).extract(token)


def extract_all(store: DataStore, tokens: Iterable[str] | None = None) -> list[FeatureVector]:
    """Feature vectors for ``tokens`` (default: every token, address order)."""
    fx = FeatureExtractor(store)
    return [fx.extract(t) for t in (sorted(store.tokens) if tokens is None else tokens)]


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def write_features_csv(path, vectors: Iterable[FeatureVector]) -> int:
    rows = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("token", *FEATURE_NAMES))
        for fv in vectors:
            w.writerow((fv.token, *(_fmt(v) for v in fv.values)))
            rows += 1
    return rows


def read_features_csv(path) -> list[FeatureVector]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header[1:]) != FEATURE_NAMES:
            raise ValueError("features.csv header does not match the feature order")
        return [FeatureVector(row[0], tuple(float(x) for x in row[1:])) for row in reader]
