import pytest
from hypothesis import given
from hypothesis import strategies as st

from scam_radar.errors import AmountError, ParseError
from scam_radar.model import (
    ETH,
    MAX_UINT256,
    EventKind,
    Label,
    LabelKind,
    PoolEvent,
    PoolInfo,
    Provenance,
    TokenAmount,
    canonicalize_address,
    canonicalize_token,
    canonicalize_tx_hash,
    normalize_name,
)

A = "0x" + "ab" * 20


def test_address_lowercased():
    assert canonicalize_address("0X" + "AB" * 20) == A


@pytest.mark.parametrize("text,offset", [
    ("0x" + "ab" * 19, 40),
    ("1x" + "ab" * 20, 0),
    ("0x" + "ab" * 10 + "zz" + "ab" * 9, 22),
])
def test_address_errors_carry_offset(text, offset):
    with pytest.raises(ParseError) as err:
        canonicalize_address(text)
    assert err.value.offset == offset


def test_token_accepts_eth_sentinel():
    assert canonicalize_token("eth") == ETH
    assert canonicalize_token(A) == A


def test_tx_hash():
    assert canonicalize_tx_hash("0x" + "F" * 64) == "0x" + "f" * 64
    with pytest.raises(ParseError):
        canonicalize_tx_hash("0x1234")


def test_normalize_name():
    assert normalize_name("  Tether   USD ") == "tether usd"
    assert normalize_name("ＵＳＤＴ") == "usdt"  # full-width letters fold to ASCII


def test_token_amount_arithmetic():
    a = TokenAmount(5, 6)
    assert (a + TokenAmount(7, 6)).base_units == 12
    assert (TokenAmount(7, 6) - a).base_units == 2
    with pytest.raises(AmountError):
        a - TokenAmount(6, 6)
    with pytest.raises(AmountError):
        a + TokenAmount(1, 18)
    assert str(TokenAmount(1_500_000, 6)) == "1.5"
    assert str(TokenAmount(42, 0)) == "42"


@pytest.mark.parametrize("units,decimals", [(-1, 18), (MAX_UINT256 + 1, 18), (1, 37), (1, -1)])
def test_token_amount_range(units, decimals):
    with pytest.raises(AmountError):
        TokenAmount(units, decimals)


def test_token_amount_from_string():
    assert TokenAmount.from_decimal_string("123", 2).base_units == 123
    with pytest.raises(ParseError):
        TokenAmount.from_decimal_string("1.5")


@given(st.integers(min_value=0, max_value=MAX_UINT256), st.integers(min_value=0, max_value=36))
def test_token_amount_string_is_exact(units, decimals):
    text = str(TokenAmount(units, decimals))
    whole, _, frac = text.partition(".")
    assert int(whole) * 10**decimals + (int(frac.ljust(decimals, "0")) if frac else 0) == units


def test_pool_tokens_sorted():
    with pytest.raises(ValueError):
        PoolInfo(A, "0x" + "ff" * 20, "0x" + "00" * 20, A, 0)
    with pytest.raises(ValueError):
        PoolInfo(A, A, A, A, 0)


def test_event_invariants():
    ok = PoolEvent("0x" + "0" * 64, 0, 1, A, EventKind.SWAP, A, amount0_in=5, amount1_out=3)
    assert ok.invariant_violation() is None
    both = PoolEvent("0x" + "0" * 64, 0, 1, A, EventKind.SWAP, A, amount0_in=5, amount1_in=1, amount1_out=3)
    assert both.invariant_violation()
    mint = PoolEvent("0x" + "0" * 64, 0, 1, A, EventKind.MINT, A, amount0_in=5, amount1_in=1)
    assert "lp" in mint.invariant_violation()


def test_derived_label_needs_cause():
    with pytest.raises(ValueError):
        Label(A, LabelKind.SCAM_TOKEN, Provenance.EXPANSION)
    Label(A, LabelKind.SCAM_TOKEN, Provenance.EXPANSION, cause=(A, LabelKind.SCAM_TOKEN_CREATOR))
    Label(A, LabelKind.SCAM_TOKEN, Provenance.VERIFIED)
