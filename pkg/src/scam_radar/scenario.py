"""Seeded synthetic market: benign tokens plus scripted scam campaigns.

Every pool action goes through the AMM engine, so the emitted logs replay
exactly. The generator also writes what it planted (truth labels, victims,
and a per-pool ledger of scammer profit) so detection can be scored.

Each campaign draws from its own RNG seeded with ``(seed, namespace, index)``;
campaigns never share random state, and all output is sorted before writing.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import amm
from .errors import ConfigError
from .ingest import (
    KEYWORDS_FILE,
    LABELS_FILE,
    OFFICIAL_FILE,
    DataStore,
    write_official,
    write_store,
    write_user_labels,
)
from .model import (
    DAI,
    ETH,
    USDC,
    USDT,
    WETH,
    ZERO_ADDRESS,
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
    normalize_name,
)

TRUTH_FILE = "truth_labels.csv"
VICTIMS_FILE = "victims.csv"
LEDGER_FILE = "ledger.json"

MINUTE = 60
HOUR = 3600
DAY = 86400

CAMPAIGN_KINDS = ("rugpull", "pump", "secondround", "collusion", "advancefee")
CAMPAIGN_KIND_NAMES = {
    "rugpull": "RugPull",
    "pump": "PumpAndDumpRugPull",
    "secondround": "SecondRoundRugPull",
    "collusion": "CollusionRugPull",
    "advancefee": "AdvanceFee",
}

# (address, name, symbol, decimals, usd)
OFFICIAL_BRANDS = (
    (WETH, "Wrapped Ether", "WETH", 18, 600.0),
    (USDT, "Tether USD", "USDT", 6, 1.0),
    (USDC, "USD Coin", "USDC", 6, 1.0),
    (DAI, "Dai Stablecoin", "DAI", 18, 1.0),
    ("0x1f9840a85d5af5bf1d1762f925bdaddc4201f984", "Uniswap", "UNI", 18, 3.5),
    ("0x514910771af9ca656af840dff83e8264ecf986ca", "ChainLink Token", "LINK", 18, 13.0),
    ("0x0bc529c00c6401aef6d220be8c6ea1667f6ad93e", "yearn.finance", "YFI", 18, 25000.0),
    ("0x7fc66500c84a76ad7e9c93437bfc5ac33e2ddae9", "Aave Token", "AAVE", 18, 90.0),
    ("0xc00e94cb662c3520282e6f5717214004a7f26888", "Compound", "COMP", 18, 150.0),
    ("0x6b3595068778dd592e39a122f4f5a5cf09c90fe2", "SushiToken", "SUSHI", 18, 1.5),
)
ETH_USD = 600.0
STABLES = (USDT, USDC, DAI)

HOT_NAMES = (
    ("bore.finance", "BORE"), ("Deriswap", "DWAP"), ("certik.foundation", "CTK"), ("woo.network", "WOO"),
    ("akash.network", "AKT"), ("flamingo.finance", "FLM"), ("medicalveda.com", "MVEDA"),
    ("Meridian Network", "MRDN"), ("Injective Protocol", "INJ"), ("Alpha Finance Lab", "ALPHA"),
    ("Keep3r", "KPR"), ("YKeep3r.network", "YKP3R"), ("Xfinances", "XFIS"), ("Super Core Reserve Token", "SCRT"),
    ("piratetoken.finance", "PIRATE"), ("RadixDLT.com", "RADIX"), ("Cybercore.Finance", "CYBER"),
    ("Bizcoin", "BIZ"), ("Leopard lending ecology", "LLE"), ("VIPswap", "VIP"), ("Radar", "RADR"),
    ("Levana", "LEV"), ("Polkastarter.finance", "POLS"), ("Hegic.finance", "HEGIC"), ("Sashimi.network", "SASHIMI"),
    ("Swerve.fi", "SWRV"), ("Pickle.finance", "PICKLE"), ("Harvest.finance", "FARM"), ("Cream.finance", "CREAM"),
    ("Based.money", "BASED"),
)
BRAND_KEYWORDS = ("google", "amazon", "tiktok", "trump", "elon musk", "facebook", "tesla", "netflix")
BRAND_SUFFIXES = ("Coin", "Token", "Finance", "Cash", "Swap", "Network")

_SYLLABLES = ("ka", "lo", "mi", "ra", "ve", "tu", "zen", "dor", "qua", "pi", "sol", "nex", "bri", "fa", "gu",
              "hy", "jo", "ky", "lu", "mo", "no", "pe", "ri", "sa", "ti", "vu", "wa", "xi", "yo", "ze")
_BENIGN_SUFFIXES = ("", " Token", " Protocol", " DAO", " Labs", " Credits", " Points", " Chain")


@dataclass
class GeneratorConfig:
    seed: int = 42
    benign_tokens: int = 1050
    campaigns: dict[str, int] = field(default_factory=lambda: {
        "rugpull": 450, "pump": 260, "secondround": 100, "collusion": 100, "advancefee": 40})
    victims_mean: float = 3.5  # victims per scam pool; 39,762 / 11,215 ~= 3.5
    newcomers: int = 3000
    traders: int = 2000
    multi_token_creators: int = 10
    deployers: int = 1
    deployer_benign_tokens: int = 20
    partner_pool_fraction: float = 0.05
    two_hop_every: int = 5
    advance_fee_fraction: str = "0.05"
    advance_fee_swaps: int = 10
    p_rug_within_hour: float = 0.37
    p_rug_within_day: float = 0.86
    benign_official_fraction: float = 0.3
    benign_mean_events: float = 25.0
    benign_abandon_fraction: float = 0.1
    benign_failed_launch_fraction: float = 0.06
    start_ts: int = 1588636800  # 2020-05-05
    horizon_days: int = 215

    @property
    def end_ts(self) -> int:
        return self.start_ts + self.horizon_days * DAY

    def validate(self) -> None:
        unknown = set(self.campaigns) - set(CAMPAIGN_KINDS)
        if unknown:
            raise ConfigError(f"unknown campaign kinds {sorted(unknown)}; expected {CAMPAIGN_KINDS}")
        if any(v < 0 for v in self.campaigns.values()):
            raise ConfigError("campaign counts must be >= 0")
        if self.victims_mean < 0:
            raise ConfigError("victims_mean must be >= 0")
        if self.victims_mean == 0 and (self.campaigns.get("pump", 0) or self.campaigns.get("advancefee", 0)):
            raise ConfigError("pump and advance-fee campaigns need victims to trade against (victims_mean > 0)")
        if self.benign_tokens < 0 or self.newcomers < 1 or self.traders < 1:
            raise ConfigError("population sizes must be positive")
        if not 0 < self.p_rug_within_hour <= self.p_rug_within_day <= 1:
            raise ConfigError("need 0 < p_rug_within_hour <= p_rug_within_day <= 1")
        f = Fraction(self.advance_fee_fraction)
        if not 0 < f < 1:
            raise ConfigError("advance_fee_fraction must be in (0, 1)")
        if self.horizon_days < 30:
            raise ConfigError("horizon_days must be >= 30")


@dataclass
class CampaignScript:
    index: int
    kind: str
    creator: str
    pool_creator: str
    scammer_addresses: list[str]
    victims: list[str]
    initial_liquidity: tuple[int, int]  # (valuable base units, scam token base units)
    lifetime: int  # seconds from first mint to first drain
    start_ts: int
    valuable: str
    token_name: str
    token_symbol: str
    name_rule: str
    rng_seed: tuple[int, ...]
    token_creator: str | None = None  # defaults to creator


@dataclass
class Market:
    store: DataStore
    truth: list[Label]
    officials: list[OfficialToken]
    user_labels: list[tuple[str, LabelKind]]
    brand_keywords: list[str]
    victims: set[str]
    ledger: dict

    def truth_addresses(self, kind: LabelKind) -> set[str]:
        return {lb.subject for lb in self.truth if lb.kind is kind}


# --------------------------------------------------------------------------- ids

def _hex(*parts) -> str:
    return hashlib.sha256("/".join(str(p) for p in parts).encode()).hexdigest()


class _Ids:
    """Deterministic, namespaced addresses and transaction hashes."""

    def __init__(self, seed: int, namespace: str):
        self.seed = seed
        self.ns = namespace
        self._n = 0

    def address(self) -> str:
        self._n += 1
        return "0x" + _hex("addr", self.seed, self.ns, self._n)[:40]

    def tx(self) -> str:
        self._n += 1
        return "0x" + _hex("tx", self.seed, self.ns, self._n)


def _population(seed: int, name: str, n: int) -> list[str]:
    return ["0x" + _hex("pop", seed, name, i)[:40] for i in range(n)]


# --------------------------------------------------------------------------- pool simulation

class _Tape:
    def __init__(self):
        self.events: list[PoolEvent] = []
        self.transfers: list[TransferRecord] = []

    def transfer(self, tx: str, log: int, ts: int, token: str, sender: str, recipient: str, amount: int) -> None:
        self.transfers.append(TransferRecord(tx, log, ts, token, sender, recipient, amount))


class _PoolSim:
    """One pool driven through the engine, emitting events and ERC-20 transfers."""

    def __init__(self, info: PoolInfo, tape: _Tape, ids: _Ids, valuable_set: frozenset):
        self.info = info
        self.state = amm.PoolState()
        self.tape = tape
        self.ids = ids
        self.valuable = valuable_set
        self.scam_side: int | None = None
        # net valuable flows of the addresses in ``ledger_set``
        self.ledger_set: set[str] = set()
        self.ledger_net: dict[str, int] = {}

    @property
    def tokens(self) -> tuple[str, str]:
        return self.info.token0, self.info.token1

    def side(self, token: str) -> int:
        return self.info.side_of(token)

    def reserves(self) -> tuple[int, int]:
        return self.state.reserve0, self.state.reserve1

    def _ledger(self, who: str, ins: tuple[int, int], outs: tuple[int, int]) -> None:
        if who not in self.ledger_set:
            return
        for i, t in enumerate(self.tokens):
            if t in self.valuable:
                self.ledger_net[t] = self.ledger_net.get(t, 0) + outs[i] - ins[i]

    def mint(self, who: str, in0: int, in1: int, ts: int) -> int:
        self.state, lp = amm.mint(self.state, who, in0, in1)
        tx = self.ids.tx()
        self.tape.transfer(tx, 0, ts, self.info.token0, who, self.info.address, in0)
        self.tape.transfer(tx, 1, ts, self.info.token1, who, self.info.address, in1)
        self.tape.events.append(PoolEvent(tx, 2, ts, self.info.address, EventKind.MINT, who,
                                          amount0_in=in0, amount1_in=in1, lp=lp))
        self._ledger(who, (in0, in1), (0, 0))
        return lp

    def mint_at_ratio(self, who: str, token: str, amount: int, ts: int) -> int | None:
        """Mint ``amount`` of ``token`` plus the ratio-matching amount of the other side."""
        s = self.side(token)
        r = self.reserves()
        if r[0] == 0 or r[1] == 0:
            return None
        other = amount * r[1 - s] // r[s]
        if other == 0:
            return None
        if r[1 - s] < r[s]:
            # round on the coarser side so the deposit ratio stays within tolerance
            amount = other * r[s] // r[1 - s]
            if amount == 0:
                return None
        in0, in1 = (amount, other) if s == 0 else (other, amount)
        return self.mint(who, in0, in1, ts)

    def burn(self, who: str, lp: int, ts: int) -> tuple[int, int]:
        self.state, o0, o1 = amm.burn(self.state, who, lp)
        tx = self.ids.tx()
        self.tape.transfer(tx, 0, ts, self.info.token0, self.info.address, who, o0)
        self.tape.transfer(tx, 1, ts, self.info.token1, self.info.address, who, o1)
        self.tape.events.append(PoolEvent(tx, 2, ts, self.info.address, EventKind.BURN, who,
                                          amount0_out=o0, amount1_out=o1, lp=lp))
        self._ledger(who, (0, 0), (o0, o1))
        return o0, o1

    def swap(self, who: str, token_in: str, amount: int, ts: int,
             fee: tuple[str, Fraction] | None = None) -> int | None:
        """Swap ``amount`` of ``token_in``; returns the gross output or None for a dust swap."""
        s = self.side(token_in)
        side = amm.Side.ZERO_FOR_ONE if s == 0 else amm.Side.ONE_FOR_ZERO
        try:
            self.state, out = amm.swap(self.state, who, side, amount)
        except (amm.DustSwap, amm.NoLiquidity):
            return None
        tx = self.ids.tx()
        token_out = self.tokens[1 - s]
        self.tape.transfer(tx, 0, ts, token_in, who, self.info.address, amount)
        log = 1
        if fee is not None:
            fee_addr, frac = fee
            cut = out * frac.numerator // frac.denominator
            self.tape.transfer(tx, log, ts, token_out, self.info.address, who, out - cut)
            self.tape.transfer(tx, log + 1, ts, token_out, self.info.address, fee_addr, cut)
            log += 2
        else:
            self.tape.transfer(tx, log, ts, token_out, self.info.address, who, out)
            log += 1
        ins = (amount, 0) if s == 0 else (0, amount)
        outs = (0, out) if s == 0 else (out, 0)
        self.tape.events.append(PoolEvent(tx, log, ts, self.info.address, EventKind.SWAP, who,
                                          amount0_in=ins[0], amount1_in=ins[1],
                                          amount0_out=outs[0], amount1_out=outs[1]))
        self._ledger(who, ins, outs)
        return out


def _make_pool(ids: _Ids, token_a: str, token_b: str, creator: str, ts: int) -> PoolInfo:
    t0, t1 = sorted((token_a, token_b))
    return PoolInfo(ids.address(), t0, t1, creator, ts)


def _units(x: float, decimals: int) -> int:
    return max(1, int(round(x * 10**decimals)))


# --------------------------------------------------------------------------- naming

class _Names:
    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.used_names: set[str] = {normalize_name(b[1]) for b in OFFICIAL_BRANDS}
        self.used_names |= {normalize_name(n) for n, _ in HOT_NAMES}
        self.used_symbols: set[str] = {normalize_name(b[2]) for b in OFFICIAL_BRANDS}
        self.used_symbols |= {normalize_name(s) for _, s in HOT_NAMES}

    def unique(self) -> tuple[str, str]:
        while True:
            k = int(self.rng.integers(2, 4))
            stem = "".join(self.rng.choice(_SYLLABLES, size=k))
            name = stem.capitalize() + str(self.rng.choice(_BENIGN_SUFFIXES))
            norm = normalize_name(name)
            if norm in self.used_names or any(b in norm for b in BRAND_KEYWORDS):
                continue
            letters = "".join(ch for ch in stem.upper() if ch.isalpha())
            symbol = letters[: int(self.rng.integers(3, 6))]
            n = 0
            while normalize_name(symbol) in self.used_symbols:
                n += 1
                symbol = f"{letters[:4]}{n}"
            self.used_names.add(norm)
            self.used_symbols.add(normalize_name(symbol))
            return name, symbol


# --------------------------------------------------------------------------- lifetimes

_GOLDEN = (math.sqrt(5) - 1) / 2


def lifetime_bucket(i: int, p_hour: float, p_day: float) -> int:
    """0: under an hour, 1: under a day, 2: longer. Low-discrepancy in ``i``."""
    u = (0.5 + i * _GOLDEN) % 1.0
    if u < p_hour:
        return 0
    if u < p_day:
        return 1
    return 2


def _draw_lifetime(rng: np.random.Generator, bucket: int) -> int:
    lo, hi = ((5 * MINUTE, HOUR), (HOUR, DAY), (DAY, 10 * DAY))[bucket]
    return int(rng.integers(lo, hi))


# --------------------------------------------------------------------------- generator

class _World:
    def __init__(self, config: GeneratorConfig):
        self.cfg = config
        self.seed = config.seed
        self.tape = _Tape()
        self.tokens: dict[str, TokenInfo] = {}
        self.pools: dict[str, PoolInfo] = {}
        self.truth: list[Label] = []
        self.victims: set[str] = set()
        self.ledger: dict[str, dict] = {}
        self.valuable = frozenset({ETH, WETH, USDT, USDC, DAI})
        self.newcomers = _population(self.seed, "newcomer", config.newcomers)
        self.traders = _population(self.seed, "trader", config.traders)
        # heavy users trade more often
        w = 1.0 / np.arange(1, config.traders + 1) ** 0.8
        self.trader_weights = w / w.sum()
        self.official_rows: list[tuple[str, str, str]] = []
        self.user_labels: list[tuple[str, LabelKind]] = []

    def rng(self, namespace: str, index: int = 0) -> np.random.Generator:
        key = int(_hex(namespace)[:8], 16)
        return np.random.default_rng([self.seed, key, index])

    def truth_label(self, address: str, kind: LabelKind, rule: str) -> None:
        self.truth.append(Label(address, kind, Provenance.GROUND_TRUTH, evidence=rule))

    def add_token(self, info: TokenInfo) -> None:
        self.tokens[info.address] = info

    def valuable_units(self, token: str, usd: float) -> int:
        price = ETH_USD if token in (ETH, WETH) else 1.0
        decimals = 18 if token in (ETH, WETH, DAI) else 6
        return _units(usd / price, decimals)

    def usd_of(self, token: str, units: int) -> float:
        price = ETH_USD if token in (ETH, WETH) else 1.0
        decimals = 18 if token in (ETH, WETH, DAI) else 6
        return units / 10**decimals * price

    # ---------------------------------------------------------------- benign

    def official_tokens(self) -> None:
        ids = _Ids(self.seed, "official")
        rng = self.rng("official")
        for address, name, symbol, decimals, usd in OFFICIAL_BRANDS:
            creator = ids.address()
            self.add_token(TokenInfo(address, name, symbol, decimals, creator, self.cfg.start_ts - 100 * DAY))
            self.official_rows.append((address, name, symbol))
        # non-WETH brands trade against WETH
        for k, (address, name, symbol, decimals, usd) in enumerate(OFFICIAL_BRANDS[1:], start=1):
            self.benign_pool(address, decimals, usd, self.cfg.start_ts + k * HOUR, self.cfg.end_ts,
                             rng, ids, mean_events=4 * self.cfg.benign_mean_events, creator=ids.address(),
                             pair=WETH)

    def benign_pool(self, token: str, decimals: int, token_usd: float, t_open: int, t_close: int,
                    rng: np.random.Generator, ids: _Ids, mean_events: float, creator: str,
                    pair: str | None = None, abandon: bool = False) -> None:
        pair = pair or (WETH if rng.random() < 0.7 else STABLES[int(rng.integers(0, 3))])
        info = _make_pool(ids, token, pair, creator, t_open)
        self.pools[info.address] = info
        sim = _PoolSim(info, self.tape, ids, self.valuable)
        liq_usd = float(np.exp(rng.normal(np.log(20000), 1.0)))
        v_units = self.valuable_units(pair, liq_usd) if pair != WETH or token != WETH else 0
        if pair in self.valuable:
            v_units = self.valuable_units(pair, liq_usd)
        else:
            v_units = _units(liq_usd / 600.0, 18)
        t_units = _units(liq_usd / token_usd, decimals)
        s_tok = sim.side(token)
        in0, in1 = (t_units, v_units) if s_tok == 0 else (v_units, t_units)
        sim.mint(creator, in0, in1, t_open)
        providers = {creator}
        n_events = min(int(rng.geometric(1.0 / mean_events)), 600)
        times = np.unique(rng.integers(t_open + 1, max(t_open + 2, t_close), size=n_events))
        for ts in times:
            ts = int(ts)
            u = rng.random()
            if u < 0.08:
                who = self.traders[int(rng.choice(len(self.traders), p=self.trader_weights))]
                amount = max(1, int(sim.reserves()[sim.side(pair)] * float(rng.uniform(0.01, 0.2))))
                if sim.mint_at_ratio(who, pair, amount, ts):
                    providers.add(who)
            elif u < 0.14 and providers:
                who = sorted(providers)[int(rng.integers(0, len(providers)))]
                held = sim.state.lp_of(who)
                if held > 0 and (who != creator or sim.state.lp_total_supply > held):
                    lp = max(1, int(held * float(rng.uniform(0.2, 1.0))))
                    try:
                        sim.burn(who, lp, ts)
                    except amm.InvalidLiquidity:
                        continue
                    if sim.state.lp_of(who) == 0:
                        providers.discard(who)
            else:
                if rng.random() < 0.1:
                    who = self.newcomers[int(rng.integers(0, len(self.newcomers)))]
                else:
                    who = self.traders[int(rng.choice(len(self.traders), p=self.trader_weights))]
                buy = rng.random() < 0.5
                tin = pair if buy else token
                reserve = sim.reserves()[sim.side(tin)]
                frac = min(0.2, float(np.exp(rng.normal(np.log(0.005), 1.0))))
                sim.swap(who, tin, max(1, int(reserve * frac)), ts)
        if abandon:
            held = sim.state.lp_of(creator)
            if held:
                sim.burn(creator, held, int(t_close))

    def benign_tokens(self) -> None:
        cfg = self.cfg
        rng = self.rng("benign")
        names = self._names
        ids = _Ids(self.seed, "benign")
        creators = [ids.address() for _ in range(max(1, cfg.benign_tokens // 3))]
        deployers = [ids.address() for _ in range(cfg.deployers)]
        self.deployer_addresses = deployers
        for d in deployers:
            self.user_labels.append((d, LabelKind.CONTRACT_DEPLOYER_EXCLUDED))
        specs = [(creators[int(rng.integers(0, len(creators)))], False) for _ in range(cfg.benign_tokens)]
        for d in deployers:
            specs += [(d, True) for _ in range(cfg.deployer_benign_tokens)]
        for i, (creator, _) in enumerate(specs):
            trng = self.rng("benign-token", i)
            name, symbol = names.unique()
            created = int(trng.integers(cfg.start_ts, cfg.end_ts - 10 * DAY))
            address = ids.address()
            self.add_token(TokenInfo(address, name, symbol, 18, creator, created))
            if trng.random() < cfg.benign_official_fraction:
                self.official_rows.append((address, name, symbol))
            token_usd = float(np.exp(trng.normal(np.log(0.5), 1.5)))
            t_open = created + int(trng.integers(MINUTE, 3 * DAY))
            u = trng.random()
            abandon = u < cfg.benign_abandon_fraction + cfg.benign_failed_launch_fraction
            mean_events = cfg.benign_mean_events
            if u < cfg.benign_failed_launch_fraction:
                # a launch that never takes off; the creator withdraws within days
                t_close = t_open + int(trng.integers(HOUR, 3 * DAY))
                mean_events = 4.0
            elif abandon:
                t_close = min(cfg.end_ts, t_open + int(trng.integers(5, 60)) * DAY)
            else:
                t_close = cfg.end_ts
            self.benign_pool(address, 18, token_usd, t_open, t_close, trng, ids,
                             mean_events=mean_events, creator=creator, abandon=abandon)
            # transfers outside the DEX
            holders = [self.traders[int(trng.choice(len(self.traders), p=self.trader_weights))]
                       for _ in range(4)] + [creator]
            for _ in range(int(trng.geometric(1.0 / (cfg.benign_mean_events * 1.5)))):
                ts = int(trng.integers(t_open, cfg.end_ts))
                a, b = trng.choice(len(holders), size=2, replace=False)
                self.tape.transfer(ids.tx(), 0, ts, address, holders[a], holders[b],
                                   _units(float(trng.uniform(1, 1000)), 18))

    # ---------------------------------------------------------------- scams

    def plan(self) -> list[CampaignScript]:
        cfg = self.cfg
        rng = self.rng("plan")
        ids = _Ids(self.seed, "plan")
        kinds = [k for k in CAMPAIGN_KINDS for _ in range(cfg.campaigns.get(k, 0))]
        order = rng.permutation(len(kinds))
        kinds = [kinds[i] for i in order]
        n = len(kinds)

        # naming: clones, shared hot names in groups, brand impersonation
        rules = []
        for i in range(n):
            u = rng.random()
            rules.append("NameMatch" if u < 0.45 else ("VerifiedNameGroup" if u < 0.75 else "VerifiedKeyword"))
        creators = [ids.address() for _ in range(n)]
        # multi-token creators reuse one creator over several rugpull-like campaigns
        multi = min(cfg.multi_token_creators, n // 2)
        self.multi_creators = []
        slots = list(rng.permutation(n))
        for m in range(multi):
            take = min(int(rng.integers(2, 5)), len(slots))
            if take < 1:
                break
            chosen = sorted(int(slots.pop()) for _ in range(take))
            if not chosen:
                break
            for j in chosen:
                creators[j] = creators[chosen[0]]
            rules[chosen[0]] = "NameMatch"
            self.multi_creators.append(creators[chosen[0]])

        hot_cursor = 0
        hot_left = 0
        hot_current = HOT_NAMES[0]
        scripts = []
        brand_n = 0
        for i, kind in enumerate(kinds):
            crng = self.rng("campaign", i)
            rule = rules[i]
            if rule == "NameMatch":
                brand = OFFICIAL_BRANDS[int(crng.integers(0, len(OFFICIAL_BRANDS)))]
                pad = " " * int(crng.integers(0, 2))
                name = pad + (brand[1] if crng.random() < 0.7 else brand[1].upper()) + pad
                symbol = brand[2]
            elif rule == "VerifiedNameGroup":
                if hot_left == 0:
                    hot_current = HOT_NAMES[hot_cursor % len(HOT_NAMES)]
                    hot_cursor += 1
                    hot_left = int(rng.integers(3, 13))
                hot_left -= 1
                name, symbol = hot_current
            else:
                kw = BRAND_KEYWORDS[brand_n % len(BRAND_KEYWORDS)]
                brand_n += 1
                name = f"{kw.title()} {BRAND_SUFFIXES[int(crng.integers(0, len(BRAND_SUFFIXES)))]}"
                symbol = "".join(w[0] for w in name.split()).upper() + str(int(crng.integers(1, 99)))
            valuable = WETH if crng.random() < 0.85 else STABLES[int(crng.integers(0, 3))]
            usd = float(np.exp(crng.normal(np.log(6000), 0.8)))
            supply = _units(float(np.exp(crng.normal(np.log(1e6), 1.5))), 18)
            creator = creators[i]
            pool_creator = creator
            if crng.random() < cfg.partner_pool_fraction and kind == "rugpull":
                pool_creator = ids.address()
            n_victims = 0
            if cfg.victims_mean > 0:
                n_victims = 1 + int(crng.poisson(max(cfg.victims_mean - 1, 0)))
            victims = sorted({self.newcomers[int(crng.integers(0, len(self.newcomers)))] for _ in range(n_victims)})
            start = int(crng.integers(cfg.start_ts + 5 * DAY, cfg.end_ts - 12 * DAY))
            scripts.append(CampaignScript(
                index=i, kind=kind, creator=creator, pool_creator=pool_creator,
                scammer_addresses=sorted({creator, pool_creator}), victims=victims,
                initial_liquidity=(self.valuable_units(valuable, usd), supply * int(crng.integers(3, 9)) // 10),
                lifetime=0, start_ts=start, valuable=valuable, token_name=name, token_symbol=symbol,
                name_rule=rule, rng_seed=(self.seed, i),
            ))
        # lifetime buckets by low-discrepancy index over all rugged pools
        for i, s in enumerate(scripts):
            bucket = lifetime_bucket(i, cfg.p_rug_within_hour, cfg.p_rug_within_day)
            s.lifetime = _draw_lifetime(self.rng("lifetime", i), bucket)
        # one scam token deployed through each excluded contract deployer
        clones = [s for s in scripts if s.name_rule == "NameMatch" and s.creator not in self.multi_creators
                  and s.kind == "rugpull" and s.pool_creator == s.creator]
        for d, s in zip(self.deployer_addresses, clones):
            s.token_creator = d
            s.scammer_addresses = [s.pool_creator]
        return scripts

    def run_campaign(self, s: CampaignScript) -> None:
        cfg = self.cfg
        rng = self.rng("run", s.index)
        ids = _Ids(self.seed, f"campaign-{s.index}")
        token_creator = s.token_creator or s.creator
        token = ids.address()
        self.add_token(TokenInfo(token, s.token_name, s.token_symbol, 18, token_creator, s.start_ts))
        t_mint = s.start_ts + int(rng.integers(MINUTE, 2 * HOUR))
        info = _make_pool(ids, token, s.valuable, s.pool_creator, t_mint)
        self.pools[info.address] = info
        sim = _PoolSim(info, self.tape, ids, self.valuable)
        scammers = set(s.scammer_addresses)
        sim.ledger_set = scammers  # grows as collusion addresses are scripted
        pool = info.address
        entry = {"kind": CAMPAIGN_KIND_NAMES[s.kind], "token": token, "rounds": 1, "collusion": {},
                 "advance_fee": None}
        self.ledger[pool] = entry

        # scam token supply to the liquidity provider
        self.tape.transfer(ids.tx(), 0, s.start_ts, token, ZERO_ADDRESS, s.pool_creator,
                           s.initial_liquidity[1] * 2)
        v_units, t_units = s.initial_liquidity
        in0, in1 = (t_units, v_units) if sim.side(token) == 0 else (v_units, t_units)
        sim.mint(s.pool_creator, in0, in1, t_mint)
        t_drain = t_mint + s.lifetime

        fee = None
        if s.kind == "advancefee":
            fee_addr = ids.address()
            fee = (fee_addr, Fraction(cfg.advance_fee_fraction))
            entry["advance_fee"] = {"fee_address": fee_addr, "fraction": float(fee[1])}
            self.truth_label(fee_addr, LabelKind.ADVANCE_FEE_RECIPIENT, "AdvanceFeeRule")

        victims = list(s.victims)
        n_buys = len(victims)
        if s.kind == "advancefee":
            n_buys = max(cfg.advance_fee_swaps, n_buys)
        buyers = [victims[i % len(victims)] for i in range(n_buys)] if victims else []

        collusion_steps = self.script_collusion(s, sim, token, rng, ids) if s.kind == "collusion" else None
        pre_steps = collusion_steps["pre"] if collusion_steps else []
        post_steps = collusion_steps["post"] if collusion_steps else []

        # distinct instants strictly inside the first round
        n_slots = len(pre_steps) + 2 * len(buyers) + len(collusion_steps["late"] if collusion_steps else ()) + 4
        span = max(t_drain - t_mint - 1, n_slots + 1)
        slots = sorted(int(x) for x in rng.choice(np.arange(1, span), size=min(n_slots, span - 1), replace=False))
        slots = [t_mint + x for x in slots]
        cursor = 0

        def next_slot():
            nonlocal cursor
            ts = slots[min(cursor, len(slots) - 1)]
            cursor += 1
            return ts

        if s.kind == "pump":
            ts = next_slot()
            pump = int(v_units * float(rng.uniform(0.2, 0.8)))
            sim.swap(s.pool_creator, s.valuable, pump, ts)
        for step in pre_steps:
            step(next_slot())
        sold = []
        for b in buyers:
            ts = next_slot()
            amount = self.valuable_units(s.valuable, float(np.exp(rng.normal(np.log(600), 0.9))))
            amount = min(amount, max(1, sim.reserves()[sim.side(s.valuable)] // 2))
            out = sim.swap(b, s.valuable, amount, ts, fee=fee)
            if out and fee is None and rng.random() < 0.2:
                sold.append((b, out // 2))
        for b, amt in sold:
            sim.swap(b, token, amt, next_slot())
        if collusion_steps:
            for step in collusion_steps["late"]:
                step(next_slot())
        if s.kind == "pump":
            held = sim.state.lp_of(s.pool_creator)
            # dump what the pump bought, just before the drain
            r_tok = sim.reserves()[sim.side(token)]
            sim.swap(s.pool_creator, token, max(1, r_tok // 10), next_slot())
            del held
        lp = sim.state.lp_of(s.pool_creator)
        sim.burn(s.pool_creator, lp, t_drain)
        for k, step in enumerate(post_steps):
            step(t_drain + 60 * (k + 1))

        if s.kind == "secondround":
            t2 = t_drain + int(rng.integers(2 * MINUTE, 10 * MINUTE))
            v2 = int(v_units * float(rng.uniform(0.3, 1.0)))
            t2u = int(t_units * float(rng.uniform(0.3, 1.0)))
            in0, in1 = (t2u, v2) if sim.side(token) == 0 else (v2, t2u)
            sim.mint(s.pool_creator, in0, in1, t2)
            t2_end = t2 + int(rng.integers(10 * MINUTE, 12 * HOUR))
            n2 = max(1, len(victims))
            times = sorted(int(x) for x in rng.choice(np.arange(t2 + 1, t2_end), size=n2, replace=False))
            for ts in times:
                who = self.newcomers[int(rng.integers(0, len(self.newcomers)))]
                self.victims.add(who)
                amount = self.valuable_units(s.valuable, float(np.exp(rng.normal(np.log(600), 0.9))))
                sim.swap(who, s.valuable, min(amount, max(1, sim.reserves()[sim.side(s.valuable)] // 2)), ts)
            sim.burn(s.pool_creator, sim.state.lp_of(s.pool_creator), t2_end)
            entry["rounds"] = 2

        self.victims.update(victims)
        entry["rug_interval_seconds"] = t_drain - t_mint
        entry["scam_addresses"] = sorted(sim.ledger_set)
        entry["net_by_token"] = {t: str(v) for t, v in sorted(sim.ledger_net.items())}
        entry["profit_usd"] = math.fsum(self.usd_of(t, v) for t, v in sorted(sim.ledger_net.items()))

        # truth
        self.truth_label(token, LabelKind.SCAM_TOKEN, s.name_rule)
        self.truth_label(pool, LabelKind.SCAM_POOL, "Expansion")
        if token_creator not in self.deployer_addresses:
            self.truth_label(token_creator, LabelKind.SCAM_TOKEN_CREATOR, "Expansion")
        self.truth_label(s.pool_creator, LabelKind.SCAM_POOL_CREATOR, "Expansion")
        if s.pool_creator != token_creator and s.pool_creator != s.creator:
            # a partner that also launches an unlisted token
            extra = ids.address()
            name, symbol = self._names.unique()
            self.add_token(TokenInfo(extra, name, symbol, 18, s.pool_creator, t_drain + HOUR))
            self.truth_label(extra, LabelKind.SCAM_TOKEN, "Expansion")
            self.truth_label(s.pool_creator, LabelKind.SCAM_TOKEN_CREATOR, "Expansion")

    def script_collusion(self, s: CampaignScript, sim: _PoolSim, token: str, rng: np.random.Generator,
                         ids: _Ids) -> dict:
        """Plant one address per collusion pattern (plus a two-hop chain on every n-th campaign).

        Returns the scripted steps as closures over a timestamp, grouped by
        where they go in the campaign: ``pre`` (before victims), ``late``
        (after victims, before the drain) and ``post`` (after the drain).
        """
        creator = s.pool_creator
        v = s.valuable
        entry = self.ledger[sim.info.address]["collusion"]
        pre, late, post = [], [], []

        def new(pattern: str, rule: str) -> str:
            a = ids.address()
            sim.ledger_set.add(a)
            entry[a] = pattern
            self.truth_label(a, LabelKind.COLLUSION_ADDRESS, rule)
            return a

        def fund_token():
            return ETH if rng.random() < 0.5 else v

        def send_valuable(src, dst, amount, token_):
            def step(ts):
                self.tape.transfer(ids.tx(), 0, ts, token_, src, dst, amount)
            return step

        def send_scam(src, dst, amount):
            def step(ts):
                self.tape.transfer(ids.tx(), 0, ts, token, src, dst, amount)
            return step

        def mint_v(who, amount):
            def step(ts):
                sim.mint_at_ratio(who, v, amount, ts)
            return step

        def buy(who, amount):
            def step(ts):
                sim.swap(who, v, amount, ts)
            return step

        def sell_all(who, amount, out_box):
            def step(ts):
                out_box.append(sim.swap(who, token, amount, ts) or 0)
            return step

        def burn_all(who, out_box):
            def step(ts):
                lp = sim.state.lp_of(who)
                if lp:
                    out_box.append(sim.burn(who, lp, ts)[sim.side(v)])
            return step

        def remit(who, box, to):
            def step(ts):
                amount = sum(box)
                if amount > 0:
                    self.tape.transfer(ids.tx(), 0, ts, v, who, to, amount)
            return step

        base = s.initial_liquidity[0]
        # 1: funded by the scammer, then adds liquidity
        c1 = new("fund-then-mint", "CollusionRule1")
        a1 = max(1, base // 5)
        pre += [send_valuable(creator, c1, a1, fund_token()), send_scam(creator, c1, s.initial_liquidity[1]),
                mint_v(c1, a1)]
        # 2: own liquidity, removes it after the rug and pays the scammer
        c2 = new("burn-then-remit", "CollusionRule2")
        box2: list[int] = []
        pre += [send_scam(creator, c2, s.initial_liquidity[1]), mint_v(c2, max(1, base // 8))]
        post += [burn_all(c2, box2), remit(c2, box2, creator)]
        # 3: funded by the scammer, buys the scam token to pump it
        c3 = new("fund-then-pump", "CollusionRule3")
        a3 = max(1, base // 4)
        pre += [send_valuable(creator, c3, a3, fund_token()), buy(c3, a3)]
        # 4: receives scam tokens, dumps them after the price rises, remits the proceeds
        c4 = new("dump-then-remit", "CollusionRule4")
        box4: list[int] = []
        amount4 = max(1, s.initial_liquidity[1] // 20)
        pre += [send_scam(creator, c4, amount4)]
        late += [sell_all(c4, amount4, box4)]
        post += [remit(c4, box4, creator)]
        if self.cfg.two_hop_every and s.index % self.cfg.two_hop_every == 0 or not self._two_hop_done:
            self._two_hop_done = True
            c5 = new("fund-then-pump", "CollusionRule3")
            c6 = new("fund-then-mint (two-hop)", "CollusionRule1")
            a5 = max(2, base // 6)
            pre += [send_valuable(creator, c5, a5, fund_token()), buy(c5, a5 // 2),
                    send_valuable(c5, c6, a5 // 2, v), send_scam(creator, c6, s.initial_liquidity[1]),
                    mint_v(c6, a5 // 2)]
        # c1 withdraws after the rug, keeping liquidity accounting closed
        box1: list[int] = []
        post += [burn_all(c1, box1)]
        return {"pre": pre, "late": late, "post": post}

    def unlisted_tokens(self) -> None:
        ids = _Ids(self.seed, "unlisted")
        for m, creator in enumerate(self.multi_creators):
            rng = self.rng("unlisted", m)
            for _ in range(int(rng.integers(1, 3))):
                address = ids.address()
                name, symbol = self._names.unique()
                created = int(rng.integers(self.cfg.start_ts, self.cfg.end_ts - DAY))
                self.add_token(TokenInfo(address, name, symbol, 18, creator, created))
                self.truth_label(address, LabelKind.SCAM_TOKEN, "Expansion")

    def build(self) -> Market:
        self._names = _Names(self.rng("names"))
        self._two_hop_done = False
        self.official_tokens()
        self.benign_tokens()
        for script in self.plan():
            self.run_campaign(script)
        self.unlisted_tokens()
        prices = PriceTable({ETH: ETH_USD, **{b[0]: b[4] for b in OFFICIAL_BRANDS}}, valuation_date="2020-12-06")
        store = DataStore.build(self.tokens, self.pools, self.tape.events, self.tape.transfers, prices,
                                study_time=self.cfg.end_ts)
        truth = sorted(set(self.truth), key=lambda lb: (lb.subject, lb.kind.value, lb.evidence))
        officials = sorted((OfficialToken(a, normalize_name(n), normalize_name(s)) for a, n, s in self.official_rows),
                           key=lambda o: o.address)
        ledger = {
            "seed": self.cfg.seed,
            "config": asdict(self.cfg),
            "timing": {"p_rug_within_hour": self.cfg.p_rug_within_hour,
                       "p_rug_within_day": self.cfg.p_rug_within_day},
            "multi_token_creators": sorted(self.multi_creators),
            "deployers": sorted(self.deployer_addresses),
            "pools": {p: self.ledger[p] for p in sorted(self.ledger)},
        }
        self._official_rows_sorted = sorted(self.official_rows)
        return Market(store, truth, officials, sorted(self.user_labels), list(BRAND_KEYWORDS),
                      set(self.victims), ledger)


def generate_market(config: GeneratorConfig | None = None, seed: int | None = None) -> Market:
    config = config or GeneratorConfig()
    if seed is not None:
        config = GeneratorConfig(**{**asdict(config), "seed": seed})
    config.validate()
    world = _World(config)
    market = world.build()
    market._official_rows = world._official_rows_sorted  # original casing for official.csv
    return market


def audit(market: Market) -> list[str]:
    """Consistency problems in a generated market (empty when sound)."""
    problems = []
    truth_scam = {lb.subject for lb in market.truth
                  if lb.kind in (LabelKind.SCAM_TOKEN_CREATOR, LabelKind.SCAM_POOL_CREATOR,
                                 LabelKind.COLLUSION_ADDRESS, LabelKind.ADVANCE_FEE_RECIPIENT)}
    overlap = truth_scam & market.victims
    if overlap:
        problems.append(f"{len(overlap)} victims also hold scam roles")
    store = market.store
    for v in sorted(market.victims):
        for t in store.transfers_out.get(v, ()):
            if t.recipient in truth_scam:
                problems.append(f"victim {v} sends value to scam address {t.recipient}")
        for t in store.transfers_in.get(v, ()):
            if t.sender in truth_scam:
                problems.append(f"victim {v} receives value from scam address {t.sender}")
    for pool, entry in market.ledger["pools"].items():
        for a in entry["scam_addresses"]:
            if a not in truth_scam:
                problems.append(f"scam address {a} of pool {pool} missing from truth labels")
    return problems


def write_market(out_dir, market: Market) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_store(out, market.store)
    write_official(out / OFFICIAL_FILE, getattr(market, "_official_rows", None)
                   or [(o.address, o.name, o.symbol) for o in market.officials])
    write_user_labels(out / LABELS_FILE, market.user_labels)
    with open(out / KEYWORDS_FILE, "w", encoding="utf-8") as fh:
        fh.writelines(k + "\n" for k in market.brand_keywords)
    with open(out / TRUTH_FILE, "w", encoding="utf-8") as fh:
        fh.write("address,kind,rule\n")
        for lb in market.truth:
            fh.write(f"{lb.subject},{lb.kind.value},{lb.evidence}\n")
    with open(out / VICTIMS_FILE, "w", encoding="utf-8") as fh:
        fh.write("address\n")
        fh.writelines(v + "\n" for v in sorted(market.victims))
    with open(out / LEDGER_FILE, "w", encoding="utf-8") as fh:
        json.dump(market.ledger, fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_truth(path) -> list[tuple[str, LabelKind, str]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            if line.strip():
                a, k, r = line.rstrip("\n").split(",", 2)
                rows.append((a, LabelKind(k), r))
    return rows


def parse_campaigns(text: str) -> dict[str, int]:
    """``"rugpull=5,collusion=3"`` -> counts; kinds not listed are zero."""
    out = {k: 0 for k in CAMPAIGN_KINDS}
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "=" not in part:
            raise ConfigError(f"campaign spec {part!r} is not kind=count")
        k, v = part.split("=", 1)
        k = k.strip().lower()
        if k not in out:
            raise ConfigError(f"unknown campaign kind {k!r}; expected one of {CAMPAIGN_KINDS}")
        try:
            out[k] = int(v)
        except ValueError:
            raise ConfigError(f"campaign count {v!r} is not an integer") from None
    return out
