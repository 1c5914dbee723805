import dataclasses
import json

import pytest

from helpers import E18, Market, addr, random_market, txh
from scam_radar.errors import DuplicateRecord, IngestError, NotFound
from scam_radar.ingest import (
    EVENTS_FILE,
    PRICES_FILE,
    event_to_json,
    load_events,
    load_official_tokens,
    load_price_table,
    load_store,
    load_tokens,
    load_user_labels,
    parse_event,
    read_events,
    replay_pool,
    validate_replay,
    write_official,
    write_store,
    write_user_labels,
)
from scam_radar.model import ETH, WETH, EventKind, LabelKind, Provenance


def simple_market():
    m = Market()
    c = addr("c")
    tok = m.token("a", c)
    pool = m.pool("p", tok, WETH, c)
    m.mint_tokens(pool, c, {tok: 100 * E18, WETH: 10 * E18}, ts=10)
    m.swap(pool, addr("t"), WETH, E18, ts=20)
    m.burn_all(pool, c, ts=30)
    return m, tok, pool


def test_store_roundtrip(tmp_path):
    m = random_market(5, max_events=200)
    store = m.store()
    write_store(tmp_path, store)
    back = load_store(tmp_path, study_time=store.study_time)
    assert back.events == store.events
    assert back.transfers == store.transfers
    assert back.tokens == store.tokens
    assert back.pools == store.pools
    assert back.prices.prices == store.prices.prices


def test_event_json_roundtrip():
    m, *_ = simple_market()
    for e in m.events:
        assert parse_event(json.loads(json.dumps(event_to_json(e)))) == e


def write_lines(path, rows):
    path.write_text("".join((r if isinstance(r, str) else json.dumps(r)) + "\n" for r in rows))


def test_bad_lines_are_collected_with_line_numbers(tmp_path):
    m, *_ = simple_market()
    good = [event_to_json(e) for e in m.events]
    bad_kind = dict(good[0], kind="flash")
    bad_amount = dict(good[1], a0in="1.5")
    no_field = {k: v for k, v in good[2].items() if k != "initiator"}
    path = tmp_path / EVENTS_FILE
    write_lines(path, [good[0], bad_kind, "{not json", bad_amount, no_field, good[0]])
    res = read_events(path)
    assert len(res.records) == 1
    assert [e.line for e in res.rejects] == [2, 3, 4, 5, 6]
    assert res.rejects[0].field == "kind"
    assert res.rejects[2].field == "a0in"
    assert res.rejects[3].field == "initiator"
    assert isinstance(res.rejects[4], DuplicateRecord)
    with pytest.raises(IngestError):
        load_events(path)


def test_kind_invariant_rejected():
    m, *_ = simple_market()
    mint = event_to_json(m.events[0])
    mint["a0out"] = "5"
    with pytest.raises(IngestError, match="kind-invariant"):
        parse_event(mint, 1)


def test_events_sorted_by_key(tmp_path):
    m, *_ = simple_market()
    path = tmp_path / EVENTS_FILE
    write_lines(path, [event_to_json(e) for e in reversed(m.events)])
    assert [e.key for e in load_events(path)] == sorted(e.key for e in m.events)


def test_missing_price_table(tmp_path):
    m, *_ = simple_market()
    write_store(tmp_path, m.store())
    (tmp_path / PRICES_FILE).unlink()
    with pytest.raises(IngestError):
        load_store(tmp_path)
    assert load_store(tmp_path, require_prices=False).prices.prices == {}


def test_price_table_requires_eth_and_weth(tmp_path):
    p = tmp_path / "prices.csv"
    p.write_text(f"# valuation_date=2020-12-06\naddress,usd\nETH,600\n")
    with pytest.raises(IngestError, match="required-price"):
        load_price_table(p)
    p.write_text(f"# valuation_date=2020-12-06\naddress,usd\nETH,600\n{WETH},600\n")
    table = load_price_table(p)
    assert table.valuation_date == "2020-12-06"
    assert table.prices == {ETH: 600.0, WETH: 600.0}


def test_csv_error_reports_physical_line(tmp_path):
    p = tmp_path / "prices.csv"
    p.write_text(f"# comment\naddress,usd\nETH,600\n{WETH},cheap\n")
    with pytest.raises(IngestError) as err:
        load_price_table(p)
    assert err.value.line == 4


def test_duplicate_token(tmp_path):
    p = tmp_path / "tokens.csv"
    row = f"{addr('x')},X,X,18,{addr('c')},0\n"
    p.write_text("address,name,symbol,decimals,creator,createdTs\n" + row + row)
    with pytest.raises(DuplicateRecord):
        load_tokens(p)


def test_official_names_normalized(tmp_path):
    p = tmp_path / "official.csv"
    write_official(p, [(addr("u"), "  Tether   USD", "USDT ")])
    (o,) = load_official_tokens(p)
    assert (o.name, o.symbol) == ("tether usd", "usdt")


def test_user_labels(tmp_path):
    p = tmp_path / "labels.csv"
    write_user_labels(p, [(addr("d"), LabelKind.CONTRACT_DEPLOYER_EXCLUDED)])
    (lb,) = load_user_labels(p)
    assert lb.provenance is Provenance.USER_SUPPLIED
    p.write_text(f"address,kind\n{addr('d')},CollusionAddress\n")
    with pytest.raises(IngestError):
        load_user_labels(p)


def test_unknown_pool_reference():
    m, *_ = simple_market()
    m.events.append(dataclasses.replace(m.events[0], pool=addr("ghost"), tx_hash=txh("ghost")))
    with pytest.raises(IngestError):
        m.store()


def test_token_pools_not_found():
    m, *_ = simple_market()
    with pytest.raises(NotFound):
        m.store().token_pools(addr("ghost"))


def test_replay_clean_and_tampered():
    m, tok, pool = simple_market()
    store = m.store()
    assert validate_replay(store) == []
    events = store.pool_events(pool)
    forged = []
    for e in events:
        if e.kind is EventKind.SWAP:
            field = "amount0_out" if e.amount0_out else "amount1_out"
            e = dataclasses.replace(e, **{field: getattr(e, field) + 10})
        forged.append(e)
    _, found = replay_pool(forged)
    assert [d.event.kind for d in found] == [EventKind.SWAP]


def test_replay_tolerates_one_unit():
    m, tok, pool = simple_market()
    events = m.store().pool_events(pool)
    swap = events[1]
    field = "amount0_out" if swap.amount0_out else "amount1_out"
    nudged = dataclasses.replace(swap, **{field: getattr(swap, field) - 1})
    state, found = replay_pool([events[0], nudged])
    assert found == []
