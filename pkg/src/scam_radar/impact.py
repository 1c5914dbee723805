"""Scam behaviour profiles, profit and victim accounting, and market statistics."""

from __future__ import annotations

import csv
import math
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Iterable

from .association import LabelStore
from .errors import IncompleteProfile, MissingPrice, NotFound, PreconditionError
from .features import FeatureExtractor
from .ingest import DataStore, replay_pool
from .model import DEFAULT_VALUABLE_TOKENS, SCAMMER_KINDS, EventKind, LabelKind, PriceTable

DRAIN_FRACTION = 0.9
MIN_FEE_OCCURRENCES = 5
FEE_TOLERANCE = 1e-6

HOUR = 3600
DAY = 86400
RUG_BINS = (
    (600, "<10m"),
    (HOUR, "<1h"),
    (6 * HOUR, "<6h"),
    (DAY, "<1d"),
    (7 * DAY, "<7d"),
    (None, ">=7d"),
)


@dataclass(frozen=True)
class AdvanceFee:
    fee_address: str
    fraction: float
    occurrences: int


@dataclass
class PoolScamProfile:
    pool: str
    first_mint_ts: int
    first_major_burn_ts: int | None
    rug_interval_seconds: int | None
    rounds: int
    scammer_swap_involved: bool
    advance_fee: AdvanceFee | None = None


def _require_scam_pool(labels: LabelStore, pool: str) -> None:
    if not labels.has(pool, LabelKind.SCAM_POOL):
        raise PreconditionError(f"pool {pool} is not labeled ScamPool")


def scam_addresses(labels: LabelStore) -> set[str]:
    return labels.of_kinds(SCAMMER_KINDS)


def profile_rug(store: DataStore, labels: LabelStore, pool: str, drain_fraction: float = DRAIN_FRACTION,
                scam: set[str] | None = None) -> PoolScamProfile:
    """Rug timing and liquidity cycles of one scam pool.

    A drain is a burn by a scam address that removes at least ``drain_fraction``
    of the LP that address holds. A round is a scam mint epoch closed by a drain.
    """
    _require_scam_pool(labels, pool)
    scam = scam_addresses(labels) if scam is None else scam
    balances: dict[str, int] = defaultdict(int)
    first_mint = first_drain = None
    open_epoch = False
    cycles = 0
    swap_involved = False
    for e in store.pool_events(pool):
        a = e.initiator
        if e.kind is EventKind.MINT:
            balances[a] += e.lp
            if a in scam:
                if first_mint is None:
                    first_mint = e.timestamp
                open_epoch = True
        elif e.kind is EventKind.BURN:
            held = balances[a]
            balances[a] = held - e.lp
            if a in scam and held > 0 and e.lp >= drain_fraction * held and open_epoch:
                cycles += 1
                open_epoch = False
                if first_drain is None:
                    first_drain = e.timestamp
        elif a in scam:
            swap_involved = True
    if first_mint is None:
        raise IncompleteProfile(f"no scam-address mint on pool {pool}")
    info = store.pools[pool]
    fee = None
    for token in (info.token0, info.token1):
        if labels.has(token, LabelKind.SCAM_TOKEN):
            fee = fee or detect_advance_fee(store, token)
    return PoolScamProfile(
        pool=pool,
        first_mint_ts=first_mint,
        first_major_burn_ts=first_drain,
        rug_interval_seconds=None if first_drain is None else first_drain - first_mint,
        rounds=max(cycles, 1),
        scammer_swap_involved=swap_involved,
        advance_fee=fee,
    )


def detect_advance_fee(store: DataStore, token: str, min_occurrences: int = MIN_FEE_OCCURRENCES,
                       tolerance: float = FEE_TOLERANCE) -> AdvanceFee | None:
    """Find an address skimming a constant fraction of the token's transfers.

    Within each transaction the largest transfer of the token is the principal;
    any other transfer of the token to an address that is neither party of the
    principal nor one of the token's pools is a companion, and its fraction is
    ``companion / (principal + companion)``.
    """
    if token not in store.tokens:
        raise NotFound(f"unknown token {token}")
    pools = set(store.pools_by_token.get(token, ()))
    by_tx: dict[str, list] = defaultdict(list)
    for t in store.transfers_by_token.get(token, ()):
        by_tx[t.tx_hash].append(t)
    fractions: dict[str, list[float]] = defaultdict(list)
    for tx in sorted(by_tx):
        group = by_tx[tx]
        if len(group) < 2:
            continue
        principal = max(group, key=lambda t: t.amount)  # first on ties
        skim: dict[str, int] = defaultdict(int)
        for t in group:
            if t is principal:
                continue
            if t.recipient in (principal.sender, principal.recipient) or t.recipient in pools:
                continue
            skim[t.recipient] += t.amount
        for addr, amount in skim.items():
            fractions[addr].append(amount / (principal.amount + amount))
    best = None
    for addr in sorted(fractions):
        fs = fractions[addr]
        if len(fs) < min_occurrences:
            continue
        ref = fs[0]
        if ref <= 0 or any(abs(f - ref) > tolerance * ref for f in fs):
            continue
        if best is None or len(fs) > best.occurrences:
            best = AdvanceFee(addr, math.fsum(fs) / len(fs), len(fs))
    return best


@dataclass(frozen=True)
class PoolProfit:
    pool: str
    profit_usd: float  # all scam legs: mints, burns and swaps
    gross_profit_usd: float  # liquidity legs only
    victim_count: int
    net_by_token: dict[str, int] = field(default_factory=dict)


def compute_profit(store: DataStore, labels: LabelStore, prices: PriceTable, pool: str,
                   valuable_tokens: Iterable[str] = DEFAULT_VALUABLE_TOKENS,
                   scam: set[str] | None = None) -> PoolProfit:
    """Valuable tokens scam addresses took out of the pool minus what they put in, in USD.

    Scam-token legs are worth nothing here. Victims are every other address with
    at least one event on the pool.
    """
    _require_scam_pool(labels, pool)
    scam = scam_addresses(labels) if scam is None else scam
    valuable = set(valuable_tokens)
    info = store.pools[pool]
    sides = [(i, t) for i, t in enumerate((info.token0, info.token1)) if t in valuable]
    for _, t in sides:
        if t not in prices:
            raise MissingPrice(f"no price for valuable token {t} in pool {pool}")
    net = {t: 0 for _, t in sides}
    gross = {t: 0 for _, t in sides}
    victims = set()
    for e in store.pool_events(pool):
        if e.initiator not in scam:
            victims.add(e.initiator)
            continue
        for i, t in sides:
            delta = (e.amount0_out - e.amount0_in) if i == 0 else (e.amount1_out - e.amount1_in)
            net[t] += delta
            if e.kind is not EventKind.SWAP:
                gross[t] += delta

    def usd(amounts):
        return math.fsum(amounts[t] / 10 ** store.decimals(t) * prices.prices[t] for t in sorted(amounts))

    return PoolProfit(pool, usd(net), usd(gross), len(victims), dict(net))


def pool_flow_balance(store: DataStore, pool: str) -> tuple[int, int]:
    """Net inflow of each pool token over all participants."""
    n0 = n1 = 0
    for e in store.pool_events(pool):
        n0 += e.amount0_in - e.amount0_out
        n1 += e.amount1_in - e.amount1_out
    return n0, n1


def conservation_holds(store: DataStore, pool: str) -> bool:
    """Net flows equal the reserves the engine ends with after replaying the pool."""
    state, _ = replay_pool(store.pool_events(pool))
    return pool_flow_balance(store, pool) == (state.reserve0, state.reserve1)


# --------------------------------------------------------------------------- report

def rug_histogram(intervals: Iterable[int]) -> list[dict]:
    xs = sorted(intervals)
    rows = []
    lower = 0
    total = len(xs)
    below = 0
    for upper, name in RUG_BINS:
        count = sum(1 for x in xs if x >= lower and (upper is None or x < upper))
        below += count
        rows.append({"bin": name, "lower_seconds": lower, "upper_seconds": upper, "count": count,
                     "cumulative_fraction": below / total if total else 0.0})
        lower = upper if upper is not None else lower
    return rows


def fraction_below(intervals: Iterable[int], seconds: int) -> float:
    xs = list(intervals)
    return sum(1 for x in xs if x < seconds) / len(xs) if xs else 0.0


@dataclass
class ImpactReport:
    pools: list[dict]
    aggregates: dict
    histogram: list[dict]

    def to_json(self) -> dict:
        return {"aggregates": self.aggregates, "pools": self.pools, "rug_histogram": self.histogram}

    def write_histogram_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("bin", "lower_seconds", "upper_seconds", "count", "cumulative_fraction"))
            for r in self.histogram:
                w.writerow((r["bin"], r["lower_seconds"], "" if r["upper_seconds"] is None else r["upper_seconds"],
                            r["count"], repr(r["cumulative_fraction"])))


def build_impact_report(store: DataStore, labels: LabelStore,
                        valuable_tokens: Iterable[str] = DEFAULT_VALUABLE_TOKENS,
                        drain_fraction: float = DRAIN_FRACTION) -> ImpactReport:
    scam = scam_addresses(labels)
    valuable = frozenset(valuable_tokens)
    entries = []
    intervals = []
    incomplete = []
    all_victims: set[str] = set()
    for pool in labels.subjects(LabelKind.SCAM_POOL):
        if pool not in store.pools:
            continue
        profit = compute_profit(store, labels, store.prices, pool, valuable, scam)
        entry = {"pool": pool, "profit_usd": profit.profit_usd, "gross_profit_usd": profit.gross_profit_usd,
                 "victim_count": profit.victim_count}
        try:
            prof = profile_rug(store, labels, pool, drain_fraction, scam)
        except IncompleteProfile:
            incomplete.append(pool)
            entry.update(rug_interval_seconds=None, rounds=None, scammer_swap_involved=None, advance_fee=None)
        else:
            entry.update(rug_interval_seconds=prof.rug_interval_seconds, rounds=prof.rounds,
                         scammer_swap_involved=prof.scammer_swap_involved,
                         advance_fee=asdict(prof.advance_fee) if prof.advance_fee else None)
            if prof.rug_interval_seconds is not None:
                intervals.append(prof.rug_interval_seconds)
        all_victims.update(e.initiator for e in store.pool_events(pool) if e.initiator not in scam)
        entries.append(entry)
    n = len(entries)
    total = math.fsum(e["profit_usd"] for e in entries)
    aggregates = {
        "scam_pools": n,
        "total_profit_usd": total,
        "total_gross_profit_usd": math.fsum(e["gross_profit_usd"] for e in entries),
        "mean_profit_per_pool": total / n if n else 0.0,
        "total_victims": sum(e["victim_count"] for e in entries),
        "distinct_victims": len(all_victims),
        "rugged_pools": len(intervals),
        "fraction_rugged_within_1h": fraction_below(intervals, HOUR),
        "fraction_rugged_within_1d": fraction_below(intervals, DAY),
        "second_round_pools": sum(1 for e in entries if (e["rounds"] or 0) >= 2),
        "scammer_swap_pools": sum(1 for e in entries if e["scammer_swap_involved"]),
        "advance_fee_pools": sum(1 for e in entries if e["advance_fee"]),
        "incomplete_profiles": incomplete,
    }
    return ImpactReport(entries, aggregates, rug_histogram(intervals))


def market_stats(store: DataStore, top_fractions: tuple[float, ...] = (0.01, 0.1)) -> dict:
    """Descriptive statistics of whatever market is loaded."""
    per_pool = Counter(e.pool for e in store.events)
    n_events = len(store.events)
    counts = sorted(per_pool.values(), reverse=True)
    fx = FeatureExtractor(store) if store.events else None
    volume = {p: math.fsum(fx.pool_swap_usd(p)) for p in sorted(per_pool)} if fx else {}
    total_volume = math.fsum(volume.values())

    concentration = {}
    for frac in top_fractions:
        k = max(1, math.ceil(frac * len(counts))) if counts else 0
        key = f"top_{frac:g}"
        concentration[key] = {
            "pools": k,
            "event_share": sum(counts[:k]) / n_events if n_events else 0.0,
            "volume_share": (math.fsum(sorted(volume.values(), reverse=True)[:k]) / total_volume
                             if total_volume else 0.0),
        }

    kinds_by_addr: dict[str, set] = defaultdict(set)
    for e in store.events:
        kinds_by_addr[e.initiator].add("swap" if e.kind is EventKind.SWAP else "liquidity")
    n_addr = len(kinds_by_addr)
    only_swap = sum(1 for k in kinds_by_addr.values() if k == {"swap"})
    only_liq = sum(1 for k in kinds_by_addr.values() if k == {"liquidity"})
    both = n_addr - only_swap - only_liq

    daily = Counter(datetime.fromtimestamp(e.timestamp, tz=timezone.utc).date().isoformat() for e in store.events)
    return {
        "n_tokens": len(store.tokens),
        "n_pools": len(store.pools),
        "n_active_pools": len(per_pool),
        "n_events": n_events,
        "events_by_kind": {k.value: sum(1 for e in store.events if e.kind is k) for k in EventKind},
        "n_addresses": n_addr,
        "participation": {
            "only_swap": only_swap / n_addr if n_addr else 0.0,
            "only_liquidity": only_liq / n_addr if n_addr else 0.0,
            "both": both / n_addr if n_addr else 0.0,
        },
        "total_volume_usd": total_volume,
        "concentration": concentration,
        "pool_event_counts": {p: per_pool[p] for p in sorted(per_pool)},
        "pool_volume_usd": volume,
        "daily_event_counts": dict(sorted(daily.items())),
    }
