"""Small hand-built markets for unit tests."""

from __future__ import annotations

import hashlib

from scam_radar import amm
from scam_radar.errors import AmmError
from scam_radar.ingest import DataStore
from scam_radar.model import (
    ETH,
    WETH,
    EventKind,
    PoolEvent,
    PoolInfo,
    PriceTable,
    TokenInfo,
    TransferRecord,
)

E18 = 10**18


def addr(tag) -> str:
    return "0x" + hashlib.sha256(f"a/{tag}".encode()).hexdigest()[:40]


def txh(tag) -> str:
    return "0x" + hashlib.sha256(f"t/{tag}".encode()).hexdigest()


class Market:
    """Builds pools through the engine so every emitted event is consistent."""

    def __init__(self, prices=None):
        self.tokens: dict[str, TokenInfo] = {WETH: TokenInfo(WETH, "Wrapped Ether", "WETH", 18, addr("weth"), 0)}
        self.pools: dict[str, PoolInfo] = {}
        self.states: dict[str, amm.PoolState] = {}
        self.events: list[PoolEvent] = []
        self.transfers: list[TransferRecord] = []
        self.prices = PriceTable(dict(prices or {ETH: 600.0, WETH: 600.0}))
        self._n = 0

    def _tx(self) -> str:
        self._n += 1
        return txh(self._n)

    def token(self, tag, creator, name=None, symbol=None, decimals=18, ts=0) -> str:
        a = addr(f"token/{tag}")
        self.tokens[a] = TokenInfo(a, name or f"Token {tag}", symbol or f"T{tag}", decimals, creator, ts)
        return a

    def pool(self, tag, token_a, token_b, creator, ts=0) -> str:
        a = addr(f"pool/{tag}")
        t0, t1 = sorted((token_a, token_b))
        self.pools[a] = PoolInfo(a, t0, t1, creator, ts)
        self.states[a] = amm.PoolState()
        return a

    def mint(self, pool, who, in0, in1, ts, tx=None) -> int:
        self.states[pool], lp = amm.mint(self.states[pool], who, in0, in1)
        tx = tx or self._tx()
        info = self.pools[pool]
        self.transfers.append(TransferRecord(tx, 0, ts, info.token0, who, pool, in0))
        self.transfers.append(TransferRecord(tx, 1, ts, info.token1, who, pool, in1))
        self.events.append(PoolEvent(tx, 2, ts, pool, EventKind.MINT, who, amount0_in=in0, amount1_in=in1, lp=lp))
        return lp

    def mint_tokens(self, pool, who, amounts: dict, ts) -> int:
        info = self.pools[pool]
        return self.mint(pool, who, amounts[info.token0], amounts[info.token1], ts)

    def burn(self, pool, who, lp, ts, tx=None):
        self.states[pool], o0, o1 = amm.burn(self.states[pool], who, lp)
        tx = tx or self._tx()
        info = self.pools[pool]
        self.transfers.append(TransferRecord(tx, 0, ts, info.token0, pool, who, o0))
        self.transfers.append(TransferRecord(tx, 1, ts, info.token1, pool, who, o1))
        self.events.append(PoolEvent(tx, 2, ts, pool, EventKind.BURN, who, amount0_out=o0, amount1_out=o1, lp=lp))
        return o0, o1

    def burn_all(self, pool, who, ts):
        return self.burn(pool, who, self.states[pool].lp_of(who), ts)

    def swap(self, pool, who, token_in, amount, ts, tx=None) -> int:
        info = self.pools[pool]
        s = info.side_of(token_in)
        side = amm.Side.ZERO_FOR_ONE if s == 0 else amm.Side.ONE_FOR_ZERO
        self.states[pool], out = amm.swap(self.states[pool], who, side, amount)
        tx = tx or self._tx()
        token_out = info.token1 if s == 0 else info.token0
        self.transfers.append(TransferRecord(tx, 0, ts, token_in, who, pool, amount))
        self.transfers.append(TransferRecord(tx, 1, ts, token_out, pool, who, out))
        if s == 0:
            ev = PoolEvent(tx, 2, ts, pool, EventKind.SWAP, who, amount0_in=amount, amount1_out=out)
        else:
            ev = PoolEvent(tx, 2, ts, pool, EventKind.SWAP, who, amount1_in=amount, amount0_out=out)
        self.events.append(ev)
        return out

    def transfer(self, token, sender, recipient, amount, ts, tx=None, log_index=0) -> str:
        tx = tx or self._tx()
        self.transfers.append(TransferRecord(tx, log_index, ts, token, sender, recipient, amount))
        return tx

    def store(self, study_time=None) -> DataStore:
        return DataStore.build(self.tokens, self.pools, self.events, self.transfers, self.prices,
                               study_time=study_time)


def random_market(seed: int, max_events: int = 1000) -> Market:
    """A messy little market: shared traders, tiny pools, idle tokens, timestamp ties."""
    import numpy as np

    from scam_radar.model import USDT

    rng = np.random.default_rng(seed)
    m = Market()
    m.tokens[USDT] = TokenInfo(USDT, "Tether USD", "USDT", 6, addr("tether"), 0)
    if rng.random() < 0.7:
        m.prices.prices[USDT] = 1.0
    people = [addr(f"p{seed}/{i}") for i in range(int(rng.integers(3, 25)))]
    toks = [m.token(f"{seed}/{i}", people[int(rng.integers(0, len(people)))],
                    decimals=int(rng.choice([0, 6, 9, 18])))
            for i in range(int(rng.integers(1, 7)))]
    bases = [WETH, USDT] + toks
    pools = []
    for i in range(int(rng.integers(1, 8))):
        a, b = rng.choice(len(bases), size=2, replace=False)
        ta, tb = bases[a], bases[b]
        if any({m.pools[p].token0, m.pools[p].token1} == {ta, tb} for p in pools):
            continue
        pools.append(m.pool(f"{seed}/{i}", ta, tb, people[0]))
    budget = int(rng.integers(0, max_events + 1))
    t_hi = int(rng.choice([1, 50, 10**6]))
    for _ in range(budget):
        pool = pools[int(rng.integers(0, len(pools)))]
        st = m.states[pool]
        who = people[int(rng.integers(0, len(people)))]
        ts = int(rng.integers(0, t_hi))
        u = rng.random()
        scale = int(rng.choice([10**3, 10**9, 10**18]))
        try:
            if st.lp_total_supply == 0 or u < 0.15:
                if st.lp_total_supply == 0:
                    m.mint(pool, who, int(rng.integers(1, 1000)) * scale, int(rng.integers(1, 1000)) * scale, ts)
                else:
                    in0 = st.reserve0 * int(rng.integers(1, 50)) // 100 or 1
                    in1 = in0 * st.reserve1 // st.reserve0
                    m.mint(pool, who, in0, in1, ts)
            elif u < 0.25:
                holders = sorted(st.lp_balances)
                h = holders[int(rng.integers(0, len(holders)))]
                m.burn(pool, h, max(1, st.lp_of(h) * int(rng.integers(1, 101)) // 100), ts)
            else:
                info = m.pools[pool]
                tin = info.token0 if rng.random() < 0.5 else info.token1
                reserve = st.reserve0 if tin == info.token0 else st.reserve1
                m.swap(pool, who, tin, max(1, reserve * int(rng.integers(1, 30)) // 100), ts)
        except AmmError:
            continue
    for _ in range(int(rng.integers(0, 30))):
        t = bases[int(rng.integers(0, len(bases)))]
        tx = txh(f"extra/{seed}/{int(rng.integers(0, 10))}")
        m.transfer(t, people[0], people[-1], int(rng.integers(1, 10**6)), int(rng.integers(0, t_hi)),
                   tx=tx, log_index=int(rng.integers(0, 10**6)))
    return m
