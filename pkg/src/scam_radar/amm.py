"""Exact integer constant-product pool (Uniswap V2 mint/burn/swap semantics).

All state transitions are pure: each operation returns a new :class:`PoolState`.
Outputs are floored like EVM integer arithmetic. The 0.3% fee is charged on the
input side, so for a swap of ``a`` token0 into reserves ``(x, y)``::

    out = floor(y * a * 997 / (x * 1000 + a * 997))
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Mapping

from .errors import DustSwap, InsufficientLp, InvalidInput, InvalidLiquidity, NoLiquidity, RatioMismatch

FEE_NUMERATOR = 997
FEE_DENOMINATOR = 1000
RATIO_TOLERANCE = 1e-9


class Side(enum.Enum):
    ZERO_FOR_ONE = "ZeroForOne"
    ONE_FOR_ZERO = "OneForZero"


def _frozen(d: dict) -> Mapping:
    return MappingProxyType(d)


@dataclass(frozen=True)
class PoolState:
    reserve0: int = 0
    reserve1: int = 0
    lp_total_supply: int = 0
    lp_balances: Mapping[str, int] = field(default_factory=lambda: _frozen({}))
    fee_numerator: int = FEE_NUMERATOR
    fee_denominator: int = FEE_DENOMINATOR

    @property
    def k(self) -> int:
        return self.reserve0 * self.reserve1

    def lp_of(self, address: str) -> int:
        return self.lp_balances.get(address, 0)


def _ratio_ok(in0: int, in1: int, reserve0: int, reserve1: int, tol: float) -> bool:
    # in0/reserve0 == in1/reserve1, compared by cross-multiplication
    a = in0 * reserve1
    b = in1 * reserve0
    return abs(a - b) <= tol * max(a, b)


def mint(state: PoolState, provider: str, in0: int, in1: int,
         ratio_tolerance: float = RATIO_TOLERANCE) -> tuple[PoolState, int]:
    """Deposit both tokens; returns the new state and the LP units minted."""
    if in0 <= 0 or in1 <= 0:
        raise InvalidLiquidity("both deposit amounts must be positive")
    if state.lp_total_supply == 0:
        minted = math.isqrt(in0 * in1)
    else:
        if state.reserve0 == 0 or state.reserve1 == 0:
            raise InvalidLiquidity("pool has LP supply but an empty reserve")
        if not _ratio_ok(in0, in1, state.reserve0, state.reserve1, ratio_tolerance):
            raise RatioMismatch(
                f"deposit ratio {in0}/{in1} does not match reserves {state.reserve0}/{state.reserve1}")
        minted = state.lp_total_supply * in0 // state.reserve0
    if minted == 0:
        raise InvalidLiquidity("deposit too small to mint any LP units")
    balances = dict(state.lp_balances)
    balances[provider] = balances.get(provider, 0) + minted
    new = replace(
        state,
        reserve0=state.reserve0 + in0,
        reserve1=state.reserve1 + in1,
        lp_total_supply=state.lp_total_supply + minted,
        lp_balances=_frozen(balances),
    )
    return new, minted


def burn(state: PoolState, provider: str, lp_burned: int) -> tuple[PoolState, int, int]:
    """Redeem LP units pro rata; returns the new state and both outputs."""
    held = state.lp_of(provider)
    if lp_burned <= 0:
        raise InvalidInput("lp_burned must be positive")
    if lp_burned > held:
        raise InsufficientLp(f"{provider} holds {held} LP, tried to burn {lp_burned}")
    supply = state.lp_total_supply
    out0 = state.reserve0 * lp_burned // supply
    out1 = state.reserve1 * lp_burned // supply
    if out0 == 0 or out1 == 0:
        raise InvalidLiquidity(f"burning {lp_burned} LP returns nothing on one side")
    balances = dict(state.lp_balances)
    if held == lp_burned:
        del balances[provider]
    else:
        balances[provider] = held - lp_burned
    new = replace(
        state,
        reserve0=state.reserve0 - out0,
        reserve1=state.reserve1 - out1,
        lp_total_supply=supply - lp_burned,
        lp_balances=_frozen(balances),
    )
    return new, out0, out1


def get_amount_out(amount_in: int, reserve_in: int, reserve_out: int,
                   fee_numerator: int = FEE_NUMERATOR, fee_denominator: int = FEE_DENOMINATOR) -> int:
    with_fee = amount_in * fee_numerator
    return reserve_out * with_fee // (reserve_in * fee_denominator + with_fee)


def _reserves_for(state: PoolState, side: Side) -> tuple[int, int]:
    if side is Side.ZERO_FOR_ONE:
        return state.reserve0, state.reserve1
    return state.reserve1, state.reserve0


def swap(state: PoolState, trader: str, side: Side, amount_in: int) -> tuple[PoolState, int]:
    if amount_in <= 0:
        raise InvalidInput("amount_in must be positive")
    r_in, r_out = _reserves_for(state, side)
    if r_in <= 0 or r_out <= 0:
        raise NoLiquidity("pool has no liquidity on one side")
    out = get_amount_out(amount_in, r_in, r_out, state.fee_numerator, state.fee_denominator)
    if out == 0:
        raise DustSwap(f"swap of {amount_in} yields zero output")
    if side is Side.ZERO_FOR_ONE:
        new = replace(state, reserve0=state.reserve0 + amount_in, reserve1=state.reserve1 - out)
    else:
        new = replace(state, reserve1=state.reserve1 + amount_in, reserve0=state.reserve0 - out)
    return new, out


def price_impact(state: PoolState, side: Side, amount_in: int) -> float:
    """Relative rise in the price of the bought token caused by a hypothetical swap.

    For ZERO_FOR_ONE the bought token is token1 and its price in token0 is
    ``reserve0 / reserve1``.
    """
    new, _ = swap(state, "", side, amount_in)
    r_in, r_out = _reserves_for(state, side)
    n_in, n_out = _reserves_for(new, side)
    # (n_in/n_out) / (r_in/r_out) - 1, exact until the final division
    return (n_in * r_out - r_in * n_out) / (r_in * n_out)
