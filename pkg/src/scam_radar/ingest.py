"""Reading, writing and validating the pipeline's input files.

Event and transfer logs are JSON Lines; registries are small CSV files.
Amounts are decimal strings of integer base units so nothing is lost to floats.
"""

from __future__ import annotations

import csv
import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator, TypeVar

from . import amm
from .errors import AmmError, DuplicateRecord, IngestError, NotFound, ParseError
from .model import (
    ETH,
    WETH,
    EventKind,
    Label,
    LabelKind,
    OfficialToken,
    PoolEvent,
    PoolInfo,
    PriceTable,
    Provenance,
    TokenInfo,
    TransferRecord,
    canonicalize_address,
    canonicalize_token,
    canonicalize_tx_hash,
    normalize_name,
)

log = logging.getLogger(__name__)

EVENTS_FILE = "events.jsonl"
TRANSFERS_FILE = "transfers.jsonl"
TOKENS_FILE = "tokens.csv"
POOLS_FILE = "pools.csv"
OFFICIAL_FILE = "official.csv"
PRICES_FILE = "prices.csv"
LABELS_FILE = "labels.csv"
KEYWORDS_FILE = "brand_keywords.txt"

TOKEN_COLUMNS = ["address", "name", "symbol", "decimals", "creator", "createdTs"]
POOL_COLUMNS = ["address", "token0", "token1", "creator", "createdTs"]
OFFICIAL_COLUMNS = ["address", "name", "symbol"]
PRICE_COLUMNS = ["address", "usd"]
LABEL_COLUMNS = ["address", "kind"]

USER_LABEL_KINDS = {LabelKind.SCAM_TOKEN, LabelKind.OFFICIAL_TOKEN, LabelKind.CONTRACT_DEPLOYER_EXCLUDED}

T = TypeVar("T")


@dataclass
class IngestResult:
    """Accepted records plus everything that was rejected, one entry per bad line."""

    records: list
    rejects: list[IngestError] = field(default_factory=list)
    lines: int = 0

    def raise_first(self) -> None:
        if self.rejects:
            raise self.rejects[0]


# --------------------------------------------------------------------------- json lines

def _field(obj: dict, name: str, line: int):
    if name not in obj:
        raise IngestError("missing field", line=line, field=name)
    return obj[name]


def _int_field(obj: dict, name: str, line: int) -> int:
    value = _field(obj, name, line)
    if not isinstance(value, int) or isinstance(value, bool) or value < 0:
        raise IngestError(f"expected non-negative integer, got {value!r}", line=line, field=name)
    return value


def _amount_field(obj: dict, name: str, line: int) -> int:
    value = _field(obj, name, line)
    if not isinstance(value, str) or not value.isdigit():
        raise IngestError(f"expected decimal string of base units, got {value!r}", line=line, field=name)
    return int(value)


def _addr_field(obj: dict, name: str, line: int, allow_eth: bool = False) -> str:
    value = _field(obj, name, line)
    try:
        if not isinstance(value, str):
            raise ParseError(f"expected string, got {type(value).__name__}")
        return canonicalize_token(value) if allow_eth else canonicalize_address(value)
    except ParseError as exc:
        raise IngestError(str(exc), line=line, field=name) from None


def _tx_field(obj: dict, line: int) -> str:
    value = _field(obj, "tx", line)
    try:
        if not isinstance(value, str):
            raise ParseError("expected string")
        return canonicalize_tx_hash(value)
    except ParseError as exc:
        raise IngestError(str(exc), line=line, field="tx") from None


def parse_event(obj: dict, line: int = 0) -> PoolEvent:
    kind_text = _field(obj, "kind", line)
    try:
        kind = EventKind(kind_text)
    except ValueError:
        raise IngestError(f"unknown kind {kind_text!r}", line=line, field="kind") from None
    event = PoolEvent(
        tx_hash=_tx_field(obj, line),
        log_index=_int_field(obj, "logIndex", line),
        timestamp=_int_field(obj, "ts", line),
        pool=_addr_field(obj, "pool", line),
        kind=kind,
        initiator=_addr_field(obj, "initiator", line),
        amount0_in=_amount_field(obj, "a0in", line),
        amount1_in=_amount_field(obj, "a1in", line),
        amount0_out=_amount_field(obj, "a0out", line),
        amount1_out=_amount_field(obj, "a1out", line),
        lp=_amount_field(obj, "lp", line),
    )
    problem = event.invariant_violation()
    if problem:
        raise IngestError(f"kind-invariant: {problem}", line=line, field="kind")
    return event


def event_to_json(e: PoolEvent) -> dict:
    return {
        "tx": e.tx_hash, "logIndex": e.log_index, "ts": e.timestamp, "pool": e.pool,
        "kind": e.kind.value, "initiator": e.initiator,
        "a0in": str(e.amount0_in), "a1in": str(e.amount1_in),
        "a0out": str(e.amount0_out), "a1out": str(e.amount1_out), "lp": str(e.lp),
    }


def parse_transfer(obj: dict, line: int = 0) -> TransferRecord:
    return TransferRecord(
        tx_hash=_tx_field(obj, line),
        log_index=_int_field(obj, "logIndex", line),
        timestamp=_int_field(obj, "ts", line),
        token=_addr_field(obj, "token", line, allow_eth=True),
        sender=_addr_field(obj, "from", line),
        recipient=_addr_field(obj, "to", line),
        amount=_amount_field(obj, "amount", line),
    )


def transfer_to_json(t: TransferRecord) -> dict:
    return {
        "tx": t.tx_hash, "logIndex": t.log_index, "ts": t.timestamp, "token": t.token,
        "from": t.sender, "to": t.recipient, "amount": str(t.amount),
    }


def _read_jsonl(path: Path, parse: Callable[[dict, int], T]) -> IngestResult:
    result = IngestResult(records=[])
    seen: dict[tuple[str, int], int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            result.lines += 1
            try:
                obj = json.loads(raw)
                if not isinstance(obj, dict):
                    raise IngestError("line is not a JSON object", line=lineno)
                record = parse(obj, lineno)
            except json.JSONDecodeError as exc:
                result.rejects.append(IngestError(f"invalid JSON: {exc.msg}", line=lineno))
                continue
            except IngestError as exc:
                result.rejects.append(exc)
                continue
            ident = (record.tx_hash, record.log_index)
            if ident in seen:
                result.rejects.append(DuplicateRecord(
                    f"duplicate (tx, logIndex) first seen on line {seen[ident]}", line=lineno, field="logIndex"))
                continue
            seen[ident] = lineno
            result.records.append(record)
    result.records.sort(key=lambda r: (r.timestamp, r.tx_hash, r.log_index))
    return result


def read_events(path) -> IngestResult:
    return _read_jsonl(Path(path), parse_event)


def read_transfers(path) -> IngestResult:
    return _read_jsonl(Path(path), parse_transfer)


def load_events(path) -> list[PoolEvent]:
    """Parse, validate and sort an event log; raises on the first bad line."""
    result = read_events(path)
    result.raise_first()
    return result.records


def load_transfers(path) -> list[TransferRecord]:
    result = read_transfers(path)
    result.raise_first()
    return result.records


def _write_jsonl(path, rows: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, separators=(",", ":")))
            fh.write("\n")


def write_events(path, events: Iterable[PoolEvent]) -> None:
    _write_jsonl(path, (event_to_json(e) for e in events))


def write_transfers(path, transfers: Iterable[TransferRecord]) -> None:
    _write_jsonl(path, (transfer_to_json(t) for t in transfers))


# --------------------------------------------------------------------------- csv registries

def _csv_rows(path: Path, columns: list[str]) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8", newline="") as fh:
        numbered = [(i, ln) for i, ln in enumerate(fh, start=1) if not ln.startswith("#")]
    physical = [i for i, _ in numbered]
    reader = csv.DictReader(ln for _, ln in numbered)
    if reader.fieldnames is None:
        return
    missing = [c for c in columns if c not in reader.fieldnames]
    if missing:
        raise IngestError(f"header lacks columns {missing}", line=physical[0])
    for row in reader:
        i = physical[reader.line_num - 1]
        if None in row or any(row.get(c) is None for c in columns):
            raise IngestError("wrong number of columns", line=i)
        yield i, row


def _addr(value: str, line: int, name: str, allow_eth: bool = False) -> str:
    try:
        return canonicalize_token(value) if allow_eth else canonicalize_address(value)
    except ParseError as exc:
        raise IngestError(str(exc), line=line, field=name) from None


def _int(value: str, line: int, name: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise IngestError(f"expected integer, got {value!r}", line=line, field=name) from None


def load_tokens(path) -> dict[str, TokenInfo]:
    tokens: dict[str, TokenInfo] = {}
    for line, row in _csv_rows(Path(path), TOKEN_COLUMNS):
        address = _addr(row["address"], line, "address")
        if address in tokens:
            raise DuplicateRecord(f"token {address} listed twice", line=line, field="address")
        decimals = _int(row["decimals"], line, "decimals")
        if not 0 <= decimals <= 36:
            raise IngestError(f"decimals {decimals} outside [0, 36]", line=line, field="decimals")
        tokens[address] = TokenInfo(
            address=address, name=row["name"], symbol=row["symbol"], decimals=decimals,
            creator=_addr(row["creator"], line, "creator"),
            creation_time=_int(row["createdTs"], line, "createdTs"),
        )
    return tokens


def load_pools(path) -> dict[str, PoolInfo]:
    pools: dict[str, PoolInfo] = {}
    for line, row in _csv_rows(Path(path), POOL_COLUMNS):
        address = _addr(row["address"], line, "address")
        if address in pools:
            raise DuplicateRecord(f"pool {address} listed twice", line=line, field="address")
        t0 = _addr(row["token0"], line, "token0")
        t1 = _addr(row["token1"], line, "token1")
        if t0 == t1:
            raise IngestError("token0 == token1", line=line, field="token1")
        t0, t1 = min(t0, t1), max(t0, t1)
        pools[address] = PoolInfo(
            address=address, token0=t0, token1=t1,
            creator=_addr(row["creator"], line, "creator"),
            creation_time=_int(row["createdTs"], line, "createdTs"),
        )
    return pools


def load_official_tokens(path) -> set[OfficialToken]:
    """Official token list with normalized names and symbols."""
    seen: set[str] = set()
    out: set[OfficialToken] = set()
    for line, row in _csv_rows(Path(path), OFFICIAL_COLUMNS):
        address = _addr(row["address"], line, "address")
        if address in seen:
            raise DuplicateRecord(f"official token {address} listed twice", line=line, field="address")
        seen.add(address)
        out.add(OfficialToken(address, normalize_name(row["name"]), normalize_name(row["symbol"])))
    return out


def load_price_table(path) -> PriceTable:
    path = Path(path)
    table = PriceTable()
    with open(path, encoding="utf-8") as fh:
        for ln in fh:
            if ln.startswith("#") and "valuation_date" in ln:
                table.valuation_date = ln.split("=", 1)[-1].split(":", 1)[-1].strip()
    for line, row in _csv_rows(path, PRICE_COLUMNS):
        token = _addr(row["address"], line, "address", allow_eth=True)
        try:
            usd = float(row["usd"])
        except ValueError:
            raise IngestError(f"expected number, got {row['usd']!r}", line=line, field="usd") from None
        if not usd >= 0:
            raise IngestError("price must be >= 0", line=line, field="usd")
        if token in table.prices:
            raise DuplicateRecord(f"price for {token} listed twice", line=line, field="address")
        table.prices[token] = usd
    for required in (ETH, WETH):
        if required not in table.prices:
            raise IngestError(f"required-price: no price for {required}", field="address")
    return table


def load_user_labels(path) -> list[Label]:
    labels = []
    seen = set()
    for line, row in _csv_rows(Path(path), LABEL_COLUMNS):
        address = _addr(row["address"], line, "address")
        try:
            kind = LabelKind(row["kind"].strip())
        except ValueError:
            raise IngestError(f"unknown label kind {row['kind']!r}", line=line, field="kind") from None
        if kind not in USER_LABEL_KINDS:
            raise IngestError(f"label kind {kind.value} cannot be user-supplied", line=line, field="kind")
        if (address, kind) in seen:
            raise DuplicateRecord(f"label {kind.value} on {address} listed twice", line=line)
        seen.add((address, kind))
        labels.append(Label(address, kind, Provenance.USER_SUPPLIED, evidence=f"{Path(path).name}:{line}"))
    return labels


def load_brand_keywords(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [normalize_name(ln) for ln in fh if ln.strip() and not ln.startswith("#")]


def _write_csv(path, columns: list[str], rows: Iterable[Iterable]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        w.writerows(rows)


def write_tokens(path, tokens: Iterable[TokenInfo]) -> None:
    _write_csv(path, TOKEN_COLUMNS, ((t.address, t.name, t.symbol, t.decimals, t.creator, t.creation_time)
                                     for t in tokens))


def write_pools(path, pools: Iterable[PoolInfo]) -> None:
    _write_csv(path, POOL_COLUMNS, ((p.address, p.token0, p.token1, p.creator, p.creation_time) for p in pools))


def write_official(path, rows: Iterable[tuple[str, str, str]]) -> None:
    _write_csv(path, OFFICIAL_COLUMNS, rows)


def write_prices(path, table: PriceTable) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if table.valuation_date:
            fh.write(f"# valuation_date={table.valuation_date}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PRICE_COLUMNS)
        for token in sorted(table.prices):
            w.writerow((token, repr(table.prices[token])))


def write_user_labels(path, rows: Iterable[tuple[str, LabelKind]]) -> None:
    _write_csv(path, LABEL_COLUMNS, ((a, k.value) for a, k in rows))


# --------------------------------------------------------------------------- store

@dataclass
class DataStore:
    """Indexed in-memory view of one dataset. Treat as read-only once built."""

    tokens: dict[str, TokenInfo]
    pools: dict[str, PoolInfo]
    events: list[PoolEvent]
    transfers: list[TransferRecord]
    prices: PriceTable
    study_time: int = 0
    events_by_pool: dict[str, list[PoolEvent]] = field(default_factory=dict, repr=False)
    pools_by_token: dict[str, list[str]] = field(default_factory=dict, repr=False)
    transfers_by_token: dict[str, list[TransferRecord]] = field(default_factory=dict, repr=False)
    transfers_in: dict[str, list[TransferRecord]] = field(default_factory=dict, repr=False)
    transfers_out: dict[str, list[TransferRecord]] = field(default_factory=dict, repr=False)
    tokens_by_creator: dict[str, list[str]] = field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, tokens, pools, events, transfers, prices=None, study_time: int | None = None) -> DataStore:
        events = sorted(events, key=lambda e: e.key)
        transfers = sorted(transfers, key=lambda t: t.key)
        for p in pools.values():
            for t in (p.token0, p.token1):
                if t not in tokens:
                    raise IngestError(f"pool {p.address} references unknown token {t}")
        by_pool: dict[str, list[PoolEvent]] = defaultdict(list)
        for e in events:
            if e.pool not in pools:
                raise IngestError(f"event {e.tx_hash}:{e.log_index} references unknown pool {e.pool}")
            by_pool[e.pool].append(e)
        pools_by_token: dict[str, list[str]] = defaultdict(list)
        for addr in sorted(pools):
            p = pools[addr]
            pools_by_token[p.token0].append(addr)
            pools_by_token[p.token1].append(addr)
        by_token: dict[str, list[TransferRecord]] = defaultdict(list)
        t_in: dict[str, list[TransferRecord]] = defaultdict(list)
        t_out: dict[str, list[TransferRecord]] = defaultdict(list)
        for t in transfers:
            by_token[t.token].append(t)
            t_in[t.recipient].append(t)
            t_out[t.sender].append(t)
        by_creator: dict[str, list[str]] = defaultdict(list)
        for addr in sorted(tokens):
            by_creator[tokens[addr].creator].append(addr)
        if study_time is None:
            last = [events[-1].timestamp] if events else []
            if transfers:
                last.append(transfers[-1].timestamp)
            study_time = max(last, default=0)
        return cls(
            tokens=dict(tokens), pools=dict(pools), events=events, transfers=transfers,
            prices=prices if prices is not None else PriceTable(),
            study_time=study_time,
            events_by_pool=dict(by_pool), pools_by_token=dict(pools_by_token),
            transfers_by_token=dict(by_token), transfers_in=dict(t_in), transfers_out=dict(t_out),
            tokens_by_creator=dict(by_creator),
        )

    def pool_events(self, pool: str) -> list[PoolEvent]:
        return self.events_by_pool.get(pool, [])

    def token_pools(self, token: str) -> list[str]:
        if token not in self.tokens:
            raise NotFound(f"unknown token {token}")
        return self.pools_by_token.get(token, [])

    def decimals(self, token: str) -> int:
        if token == ETH:
            return 18
        return self.tokens[token].decimals


def load_store(data_dir, *, require_prices: bool = True, study_time: int | None = None) -> DataStore:
    """Load a dataset directory in the layout written by ``write_store``."""
    d = Path(data_dir)
    tokens = load_tokens(d / TOKENS_FILE)
    pools = load_pools(d / POOLS_FILE)
    events = load_events(d / EVENTS_FILE)
    transfers = load_transfers(d / TRANSFERS_FILE) if (d / TRANSFERS_FILE).exists() else []
    price_path = d / PRICES_FILE
    if price_path.exists():
        prices = load_price_table(price_path)
    elif require_prices:
        raise IngestError(f"missing price table {price_path}")
    else:
        prices = PriceTable()
    return DataStore.build(tokens, pools, events, transfers, prices, study_time=study_time)


def write_store(data_dir, store: DataStore) -> None:
    d = Path(data_dir)
    d.mkdir(parents=True, exist_ok=True)
    write_tokens(d / TOKENS_FILE, (store.tokens[a] for a in sorted(store.tokens)))
    write_pools(d / POOLS_FILE, (store.pools[a] for a in sorted(store.pools)))
    write_events(d / EVENTS_FILE, store.events)
    write_transfers(d / TRANSFERS_FILE, store.transfers)
    write_prices(d / PRICES_FILE, store.prices)


# --------------------------------------------------------------------------- replay

@dataclass(frozen=True)
class Discrepancy:
    event: PoolEvent
    reason: str

    def __str__(self) -> str:
        e = self.event
        return f"{e.pool} {e.kind.value} {e.tx_hash}:{e.log_index}: {self.reason}"


FLOOR_TOLERANCE = 1


def _close(a: int, b: int) -> bool:
    return abs(a - b) <= FLOOR_TOLERANCE


def replay_pool(events: Iterable[PoolEvent]) -> tuple[amm.PoolState, list[Discrepancy]]:
    """Run one pool's events through the engine; the engine's view of the state carries forward."""
    state = amm.PoolState()
    found: list[Discrepancy] = []
    for e in events:
        try:
            if e.kind is EventKind.MINT:
                new, minted = amm.mint(state, e.initiator, e.amount0_in, e.amount1_in)
                if not _close(minted, e.lp):
                    found.append(Discrepancy(e, f"lp minted {e.lp}, engine gives {minted}"))
                state = new
            elif e.kind is EventKind.BURN:
                new, out0, out1 = amm.burn(state, e.initiator, e.lp)
                if not (_close(out0, e.amount0_out) and _close(out1, e.amount1_out)):
                    found.append(Discrepancy(
                        e, f"burn outputs ({e.amount0_out}, {e.amount1_out}), engine gives ({out0}, {out1})"))
                state = new
            else:
                if e.zero_for_one:
                    new, out = amm.swap(state, e.initiator, amm.Side.ZERO_FOR_ONE, e.amount0_in)
                    recorded = e.amount1_out
                else:
                    new, out = amm.swap(state, e.initiator, amm.Side.ONE_FOR_ZERO, e.amount1_in)
                    recorded = e.amount0_out
                if not _close(out, recorded):
                    found.append(Discrepancy(e, f"swap output {recorded}, engine gives {out}"))
                state = new
        except AmmError as exc:
            found.append(Discrepancy(e, f"engine rejected event: {type(exc).__name__}: {exc}"))
    return state, found


def validate_replay(store: DataStore) -> list[Discrepancy]:
    out: list[Discrepancy] = []
    for pool in sorted(store.events_by_pool):
        out.extend(replay_pool(store.events_by_pool[pool])[1])
    return out
