"""Brute-force reference for the 40 token features.

Works on the raw record lists only: no store indices, no caching, one full
scan of every list per quantity. Integer arithmetic is kept exact until the
final division so results can be compared with ``==``.
"""

from __future__ import annotations

import math
from fractions import Fraction

from scam_radar.features import FEATURE_NAMES


def _decimals(tokens, token):
    return 18 if token == "ETH" else tokens[token].decimals


def _div(num, den):
    return -1.0 if den == 0 else num / den


def _avg(xs):
    return -1.0 if not xs else sum(xs) / len(xs)


def _leg_usd(tokens, prices, token, amount):
    if token not in prices:
        return None
    return amount / 10 ** _decimals(tokens, token) * prices[token]


def oracle_features(tokens, pools, events, transfers, prices, study_time, token):
    """Feature dict for ``token``. ``pools``/``tokens`` are address -> info maps; ``prices`` a plain dict."""
    my_pools = sorted(p for p, info in pools.items() if token in (info.token0, info.token1))
    mine = [e for e in events if e.pool in my_pools]

    def token_side_amounts(e):
        info = pools[e.pool]
        if info.token0 == token:
            return e.amount0_in, e.amount0_out
        return e.amount1_in, e.amount1_out

    classes = {"mint": [], "swap": [], "swapfrom": [], "swapto": [], "burn": []}
    for e in mine:
        if e.kind.value == "mint":
            classes["mint"].append(e)
        elif e.kind.value == "burn":
            classes["burn"].append(e)
        else:
            classes["swap"].append(e)
            tin, _ = token_side_amounts(e)
            classes["swapfrom" if tin > 0 else "swapto"].append(e)

    f = {}
    if mine:
        first = min(e.timestamp for e in mine)
        last = max(e.timestamp for e in mine)
        f["T_period"] = float(last - first)
        f["T_interval"] = float(study_time - last)
    else:
        first = last = 0
        f["T_period"] = f["T_interval"] = -1.0
    for c in ("mint", "swap", "swapfrom", "swapto", "burn"):
        evs = classes[c]
        if not evs:
            f[f"P_{c}"] = -1.0
        elif last == first:
            f[f"P_{c}"] = 0.0
        else:
            pos = Fraction(sum(e.timestamp - first for e in evs), len(evs) * (last - first))
            f[f"P_{c}"] = pos.numerator / pos.denominator

    f["N_TxU"] = float(len(mine))
    f["N_TxE"] = float(len({t.tx_hash for t in transfers if t.token == token}))
    for c in ("mint", "swap", "swapto", "swapfrom", "burn"):
        f[f"N_{c}"] = float(len(classes[c]))
        f[f"A_{c}"] = float(len({e.initiator for e in classes[c]}))
    f["RE_swapfrom_swapto"] = _div(len(classes["swapfrom"]), len(classes["swapto"]))
    a_all = len({e.initiator for e in mine})
    f["A_all"] = float(a_all)
    for c in ("mint", "swap", "swapto", "swapfrom", "burn"):
        f[f"RE_{c}_all"] = _div(len(classes[c]), len(mine))
        f[f"RA_{c}_all"] = _div(len({e.initiator for e in classes[c]}), a_all)

    # investor experience over the whole market
    lp_people = {e.initiator for e in classes["mint"] + classes["burn"]}
    swap_people = {e.initiator for e in classes["swap"]}
    f["L_mintburn"] = _avg([len({e.pool for e in events if e.initiator == a and e.kind.value != "swap"})
                            for a in sorted(lp_people)])
    f["L_swap"] = _avg([len({e.pool for e in events if e.initiator == a and e.kind.value == "swap"})
                        for a in sorted(swap_people)])
    f["C_mintburn"] = _avg([sum(1 for e in events if e.initiator == a and e.kind.value != "swap")
                            for a in sorted(lp_people)])
    f["C_swap"] = _avg([sum(1 for e in events if e.initiator == a and e.kind.value == "swap")
                        for a in sorted(swap_people)])

    f["N_pool"] = float(len(my_pools))
    dec = tokens[token].decimals
    f["V_token"] = sum(sum(token_side_amounts(e)) for e in classes["swap"]) / 10**dec

    untracked = []
    tracked = []
    for p in my_pools:
        info = pools[p]
        r0 = sum(e.amount0_in - e.amount0_out for e in events if e.pool == p)
        r1 = sum(e.amount1_in - e.amount1_out for e in events if e.pool == p)
        legs = [x for x in (_leg_usd(tokens, prices, info.token0, r0), _leg_usd(tokens, prices, info.token1, r1))
                if x is not None]
        liquidity = 0.0 if not legs else (2 * legs[0] if len(legs) == 1 else legs[0] + legs[1])
        for e in events:
            if e.pool != p or e.kind.value != "swap":
                continue
            sizes = [x for x in (_leg_usd(tokens, prices, info.token0, e.amount0_in + e.amount0_out),
                                 _leg_usd(tokens, prices, info.token1, e.amount1_in + e.amount1_out))
                     if x is not None]
            usd = max(sizes) if sizes else 0.0
            usd = max(usd, 0.0)
            untracked.append(usd)
            if liquidity >= 1.0:
                tracked.append(usd)
    f["V_tracked"] = math.fsum(tracked)
    f["V_untracked"] = math.fsum(untracked)
    f["N_liquidity"] = sum(token_side_amounts(e)[0] for e in classes["mint"]) / 10**dec
    assert set(f) == set(FEATURE_NAMES)
    return f
