"""Shared domain types: addresses, token amounts, registry records, events and labels."""

from __future__ import annotations

import enum
import re
import unicodedata
from dataclasses import dataclass, field

from .errors import AmountError, ParseError

ETH = "ETH"
ZERO_ADDRESS = "0x" + "0" * 40

WETH = "0xc02aaa39b223fe8d0a0e5c4f27ead9083c756cc2"
USDT = "0xdac17f958d2ee523a2206206994597c13d831ec7"
USDC = "0xa0b86991c6218b36c1d19d4a2e9eb0ce3606eb48"
DAI = "0x6b175474e89094c44da98b954eedeac495271d0f"

# "Ether or stable coins"
DEFAULT_VALUABLE_TOKENS = frozenset({ETH, WETH, USDT, USDC, DAI})

MAX_UINT256 = (1 << 256) - 1

_HEX = set("0123456789abcdefABCDEF")
_WS = re.compile(r"\s+")


def canonicalize_address(text: str) -> str:
    """Return the canonical lowercase ``0x`` form of a 20-byte address."""
    if not isinstance(text, str):
        raise ParseError(f"address must be text, got {type(text).__name__}")
    if len(text) != 42:
        raise ParseError(f"address length {len(text)} != 42", offset=min(len(text), 42))
    if text[:2] not in ("0x", "0X"):
        raise ParseError("address must start with 0x", offset=0)
    for i, ch in enumerate(text[2:], start=2):
        if ch not in _HEX:
            raise ParseError(f"non-hex character {ch!r} in address", offset=i)
    return "0x" + text[2:].lower()


def canonicalize_token(text: str) -> str:
    """Like :func:`canonicalize_address` but also accepts the ETH sentinel."""
    if text.upper() == ETH:
        return ETH
    return canonicalize_address(text)


def canonicalize_tx_hash(text: str) -> str:
    if len(text) != 66 or text[:2] not in ("0x", "0X"):
        raise ParseError(f"transaction hash must be 0x + 64 hex chars, got length {len(text)}",
                         offset=min(len(text), 66))
    for i, ch in enumerate(text[2:], start=2):
        if ch not in _HEX:
            raise ParseError(f"non-hex character {ch!r} in tx hash", offset=i)
    return "0x" + text[2:].lower()


def normalize_name(text: str) -> str:
    """Trim, case-fold and collapse internal whitespace.

    This is the equality used when comparing token names and symbols.
    """
    text = unicodedata.normalize("NFKC", text)
    return _WS.sub(" ", text.strip()).casefold()


@dataclass(frozen=True, slots=True)
class TokenAmount:
    """An unsigned integer amount of base units with its decimals exponent."""

    base_units: int
    decimals: int = 18

    def __post_init__(self):
        if not isinstance(self.base_units, int) or isinstance(self.base_units, bool):
            raise AmountError("base_units must be an int")
        if not 0 <= self.decimals <= 36:
            raise AmountError(f"decimals {self.decimals} outside [0, 36]")
        if not 0 <= self.base_units <= MAX_UINT256:
            raise AmountError(f"amount {self.base_units} outside uint256 range")

    @classmethod
    def from_decimal_string(cls, text: str, decimals: int = 18) -> TokenAmount:
        if not text.isdigit():
            raise ParseError(f"amount {text!r} is not a non-negative decimal integer")
        return cls(int(text), decimals)

    def _check(self, other: TokenAmount) -> None:
        if not isinstance(other, TokenAmount):
            raise TypeError(f"cannot combine TokenAmount with {type(other).__name__}")
        if other.decimals != self.decimals:
            raise AmountError(f"decimals mismatch: {self.decimals} vs {other.decimals}")

    def __add__(self, other: TokenAmount) -> TokenAmount:
        self._check(other)
        return TokenAmount(self.base_units + other.base_units, self.decimals)

    def __sub__(self, other: TokenAmount) -> TokenAmount:
        self._check(other)
        if other.base_units > self.base_units:
            raise AmountError("subtraction underflow")
        return TokenAmount(self.base_units - other.base_units, self.decimals)

    def __lt__(self, other: TokenAmount) -> bool:
        self._check(other)
        return self.base_units < other.base_units

    def __le__(self, other: TokenAmount) -> bool:
        self._check(other)
        return self.base_units <= other.base_units

    def __bool__(self) -> bool:
        return self.base_units != 0

    def to_float(self) -> float:
        return self.base_units / 10**self.decimals

    def __str__(self) -> str:
        whole, frac = divmod(self.base_units, 10**self.decimals)
        if not self.decimals:
            return str(whole)
        return f"{whole}.{frac:0{self.decimals}d}".rstrip("0").rstrip(".")


@dataclass(frozen=True, slots=True)
class TokenInfo:
    address: str
    name: str
    symbol: str
    decimals: int
    creator: str
    creation_time: int


@dataclass(frozen=True, slots=True)
class PoolInfo:
    address: str
    token0: str
    token1: str
    creator: str  # first-mint sender
    creation_time: int

    def __post_init__(self):
        if self.token0 == self.token1:
            raise ValueError("pool tokens must differ")
        if self.token0 > self.token1:
            raise ValueError("pool tokens must be stored in lexicographic order")

    def side_of(self, token: str) -> int:
        if token == self.token0:
            return 0
        if token == self.token1:
            return 1
        raise KeyError(token)


class EventKind(str, enum.Enum):
    MINT = "mint"
    BURN = "burn"
    SWAP = "swap"


@dataclass(frozen=True, slots=True)
class PoolEvent:
    """One mint/burn/swap on a pool. Amounts are integer base units."""

    tx_hash: str
    log_index: int
    timestamp: int
    pool: str
    kind: EventKind
    initiator: str
    amount0_in: int = 0
    amount1_in: int = 0
    amount0_out: int = 0
    amount1_out: int = 0
    lp: int = 0

    @property
    def key(self) -> tuple[int, str, int]:
        return (self.timestamp, self.tx_hash, self.log_index)

    def invariant_violation(self) -> str | None:
        """Name of the first violated kind invariant, or None."""
        a0i, a1i, a0o, a1o = self.amount0_in, self.amount1_in, self.amount0_out, self.amount1_out
        if min(a0i, a1i, a0o, a1o, self.lp) < 0:
            return "negative amount"
        if self.kind is EventKind.MINT:
            if not (a0i > 0 and a1i > 0 and a0o == 0 and a1o == 0 and self.lp > 0):
                return "mint requires both inputs > 0, no outputs, lp > 0"
        elif self.kind is EventKind.BURN:
            if not (a0o > 0 and a1o > 0 and a0i == 0 and a1i == 0 and self.lp > 0):
                return "burn requires both outputs > 0, no inputs, lp > 0"
        else:
            zero_for_one = a0i > 0 and a1i == 0 and a1o > 0 and a0o == 0
            one_for_zero = a1i > 0 and a0i == 0 and a0o > 0 and a1o == 0
            if not (zero_for_one or one_for_zero) or self.lp != 0:
                return "swap requires exactly one input side and the opposite output, lp == 0"
        return None

    @property
    def zero_for_one(self) -> bool:
        return self.amount0_in > 0


@dataclass(frozen=True, slots=True)
class TransferRecord:
    tx_hash: str
    log_index: int
    timestamp: int
    token: str  # address or ETH
    sender: str
    recipient: str
    amount: int

    @property
    def key(self) -> tuple[int, str, int]:
        return (self.timestamp, self.tx_hash, self.log_index)


class LabelKind(str, enum.Enum):
    OFFICIAL_TOKEN = "OfficialToken"
    SCAM_TOKEN = "ScamToken"
    SCAM_POOL = "ScamPool"
    SCAM_TOKEN_CREATOR = "ScamTokenCreator"
    SCAM_POOL_CREATOR = "ScamPoolCreator"
    COLLUSION_ADDRESS = "CollusionAddress"
    CONTRACT_DEPLOYER_EXCLUDED = "ContractDeployerExcluded"
    ADVANCE_FEE_RECIPIENT = "AdvanceFeeRecipient"


class Provenance(str, enum.Enum):
    GROUND_TRUTH = "GroundTruth"
    NAME_MATCH = "NameMatch"
    EXPANSION = "Expansion"
    ML_FLAGGED = "MlFlagged"
    VERIFIED = "Verified"
    COLLUSION_RULE1 = "CollusionRule1"
    COLLUSION_RULE2 = "CollusionRule2"
    COLLUSION_RULE3 = "CollusionRule3"
    COLLUSION_RULE4 = "CollusionRule4"
    ADVANCE_FEE = "AdvanceFeeRule"
    USER_SUPPLIED = "UserSupplied"


ROOT_PROVENANCES = frozenset({Provenance.GROUND_TRUTH, Provenance.USER_SUPPLIED, Provenance.VERIFIED})

# addresses (not contracts) that operate a scam
SCAMMER_KINDS = frozenset({
    LabelKind.SCAM_TOKEN_CREATOR,
    LabelKind.SCAM_POOL_CREATOR,
    LabelKind.COLLUSION_ADDRESS,
})


@dataclass(frozen=True, slots=True)
class Label:
    subject: str
    kind: LabelKind
    provenance: Provenance
    evidence: str = ""
    # (subject, kind) of the label that triggered this one; None for roots
    cause: tuple[str, LabelKind] | None = None
    generation: int = 0

    def __post_init__(self):
        if self.cause is None and self.provenance not in ROOT_PROVENANCES:
            raise ValueError(f"{self.provenance.value} label on {self.subject} needs a cause")


def event_sort_key(record: PoolEvent | TransferRecord) -> tuple[int, str, int]:
    return (record.timestamp, record.tx_hash, record.log_index)


@dataclass(frozen=True)
class OfficialToken:
    address: str
    name: str
    symbol: str


@dataclass
class PriceTable:
    prices: dict[str, float] = field(default_factory=dict)
    valuation_date: str = ""

    def usd(self, token: str, base_units: int, decimals: int) -> float:
        return base_units / 10**decimals * self.prices[token]

    def __contains__(self, token: str) -> bool:
        return token in self.prices

    def get(self, token: str, default: float | None = None) -> float | None:
        return self.prices.get(token, default)
