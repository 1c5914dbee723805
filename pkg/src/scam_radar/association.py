"""Label propagation: name-match seeding, guilt-by-association, verification of
classifier flags, and the iterative collusion-address rules.

Every derived label points at the label that caused it, so any label can be
traced back to a root (ground truth, user supplied, or verified).
"""

from __future__ import annotations

import csv
from collections import defaultdict
from typing import Iterable, Iterator

from .errors import PreconditionError
from .ingest import DataStore
from .model import (
    DEFAULT_VALUABLE_TOKENS,
    ROOT_PROVENANCES,
    EventKind,
    Label,
    LabelKind,
    OfficialToken,
    Provenance,
    normalize_name,
)

LABEL_OUT_COLUMNS = ["address", "kind", "provenance", "evidence"]
DEFAULT_MIN_GROUP = 2


class LabelStore:
    """Append-only multimap of labels; at most one label per (subject, kind)."""

    def __init__(self, labels: Iterable[Label] = ()):
        self._labels: list[Label] = []
        self._index: dict[str, dict[LabelKind, Label]] = defaultdict(dict)
        self.generation = 0
        for label in labels:
            self.add(label)

    def add(self, label: Label) -> bool:
        slot = self._index[label.subject]
        if label.kind in slot:
            return False
        slot[label.kind] = label
        self._labels.append(label)
        self.generation = max(self.generation, label.generation)
        return True

    def has(self, subject: str, kind: LabelKind) -> bool:
        return kind in self._index.get(subject, {})

    def get(self, subject: str, kind: LabelKind) -> Label | None:
        return self._index.get(subject, {}).get(kind)

    def kinds(self, subject: str) -> set[LabelKind]:
        return set(self._index.get(subject, {}))

    def subjects(self, kind: LabelKind) -> list[str]:
        return sorted(s for s, slot in self._index.items() if kind in slot)

    def of_kinds(self, kinds: Iterable[LabelKind]) -> set[str]:
        kinds = set(kinds)
        return {s for s, slot in self._index.items() if kinds & slot.keys()}

    def __iter__(self) -> Iterator[Label]:
        return iter(self._labels)

    def __len__(self) -> int:
        return len(self._labels)

    def copy(self) -> LabelStore:
        out = LabelStore(self._labels)
        out.generation = self.generation
        return out

    def audit_chain(self, subject: str, kind: LabelKind) -> list[Label]:
        """Labels from ``(subject, kind)`` back to its root; raises if the chain is broken."""
        chain = []
        seen = set()
        label = self.get(subject, kind)
        while label is not None:
            if (label.subject, label.kind) in seen:
                raise ValueError(f"label cycle at {label.subject} {label.kind.value}")
            seen.add((label.subject, label.kind))
            chain.append(label)
            if label.cause is None:
                if label.provenance not in ROOT_PROVENANCES:
                    raise ValueError(f"chain ends at non-root label {label}")
                return chain
            label = self.get(*label.cause)
        raise ValueError(f"broken audit chain from {subject} {kind.value}")

    def sorted_labels(self) -> list[Label]:
        return sorted(self._labels, key=lambda lb: (lb.subject, lb.kind.value))

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(LABEL_OUT_COLUMNS)
            for lb in self.sorted_labels():
                w.writerow((lb.subject, lb.kind.value, lb.provenance.value, lb.evidence))


# --------------------------------------------------------------------------- seeding

def seed_ground_truth(store: DataStore, official_list: Iterable[OfficialToken],
                      user_labels: Iterable[Label] = ()) -> LabelStore:
    """Official tokens, user labels, and name/symbol clones of official tokens."""
    labels = LabelStore()
    officials = sorted(official_list, key=lambda o: o.address)
    for o in officials:
        labels.add(Label(o.address, LabelKind.OFFICIAL_TOKEN, Provenance.GROUND_TRUTH, evidence="official list"))
    for lb in user_labels:
        labels.add(lb)

    by_name: dict[str, str] = {}
    by_symbol: dict[str, str] = {}
    for o in officials:
        by_name.setdefault(normalize_name(o.name), o.address)
        by_symbol.setdefault(normalize_name(o.symbol), o.address)

    for address in sorted(store.tokens):
        if labels.has(address, LabelKind.OFFICIAL_TOKEN):
            continue
        info = store.tokens[address]
        name, symbol = normalize_name(info.name), normalize_name(info.symbol)
        if name and name in by_name:
            match, what = by_name[name], f"name {name!r}"
        elif symbol and symbol in by_symbol:
            match, what = by_symbol[symbol], f"symbol {symbol!r}"
        else:
            continue
        labels.add(Label(address, LabelKind.SCAM_TOKEN, Provenance.NAME_MATCH,
                         evidence=f"{what} copies official token {match}",
                         cause=(match, LabelKind.OFFICIAL_TOKEN)))
    return labels


# --------------------------------------------------------------------------- expansion

def expand_guilt(store: DataStore, labels: LabelStore) -> LabelStore:
    """Guilt-by-association closure, run in place until a pass adds nothing.

    Per pass: creators of scam tokens become scam token creators; pools trading
    a scam token become scam pools and their first mintors scam pool creators;
    every other token made by a scam creator becomes a scam token. Excluded
    contract deployers never become creators, so nothing propagates through them.
    """
    excluded = set(labels.subjects(LabelKind.CONTRACT_DEPLOYER_EXCLUDED))
    while True:
        gen = labels.generation + 1
        added = 0
        for token in labels.subjects(LabelKind.SCAM_TOKEN):
            info = store.tokens.get(token)
            if info is None:
                continue
            if info.creator not in excluded:
                added += labels.add(Label(info.creator, LabelKind.SCAM_TOKEN_CREATOR, Provenance.EXPANSION,
                                          evidence=f"created scam token {token}",
                                          cause=(token, LabelKind.SCAM_TOKEN), generation=gen))
            for pool in store.pools_by_token.get(token, ()):
                added += labels.add(Label(pool, LabelKind.SCAM_POOL, Provenance.EXPANSION,
                                          evidence=f"trades scam token {token}",
                                          cause=(token, LabelKind.SCAM_TOKEN), generation=gen))
                mintor = store.pools[pool].creator
                if mintor not in excluded:
                    added += labels.add(Label(mintor, LabelKind.SCAM_POOL_CREATOR, Provenance.EXPANSION,
                                              evidence=f"first mintor of scam pool {pool}",
                                              cause=(pool, LabelKind.SCAM_POOL), generation=gen))
        for kind in (LabelKind.SCAM_TOKEN_CREATOR, LabelKind.SCAM_POOL_CREATOR):
            for creator in labels.subjects(kind):
                for token in store.tokens_by_creator.get(creator, ()):
                    if labels.has(token, LabelKind.OFFICIAL_TOKEN):
                        continue
                    added += labels.add(Label(token, LabelKind.SCAM_TOKEN, Provenance.EXPANSION,
                                              evidence=f"created by {kind.value} {creator}",
                                              cause=(creator, kind), generation=gen))
        if not added:
            return labels
        labels.generation = gen


# --------------------------------------------------------------------------- verification

def verification_reasons(store: DataStore, ml_flagged: Iterable[str], brand_keywords: Iterable[str] = (),
                         min_group: int = DEFAULT_MIN_GROUP) -> dict[str, str]:
    """Flagged tokens that pass a naming heuristic, with the heuristic that fired."""
    flagged = sorted(set(ml_flagged))
    keywords = [k for k in (normalize_name(k) for k in brand_keywords) if k]
    by_name: dict[str, list[str]] = defaultdict(list)
    by_symbol: dict[str, list[str]] = defaultdict(list)
    for t in flagged:
        info = store.tokens[t]
        if normalize_name(info.name):
            by_name[normalize_name(info.name)].append(t)
        if normalize_name(info.symbol):
            by_symbol[normalize_name(info.symbol)].append(t)
    reasons: dict[str, str] = {}
    for groups, what in ((by_name, "name"), (by_symbol, "symbol")):
        for value, members in groups.items():
            if len(members) >= min_group:
                for t in members:
                    reasons.setdefault(t, f"shares {what} {value!r} with {len(members) - 1} other flagged tokens")
    for t in flagged:
        if t in reasons:
            continue
        name = normalize_name(store.tokens[t].name)
        for k in keywords:
            if k in name:
                reasons[t] = f"name impersonates brand {k!r}"
                break
    return reasons


def verify_flagged(store: DataStore, ml_flagged: Iterable[str], brand_keywords: Iterable[str] = (),
                   min_group: int = DEFAULT_MIN_GROUP) -> tuple[set[str], set[str]]:
    flagged = set(ml_flagged)
    verified = set(verification_reasons(store, flagged, brand_keywords, min_group))
    return verified, flagged - verified


def add_verified(labels: LabelStore, reasons: dict[str, str]) -> int:
    gen = labels.generation + 1
    added = 0
    for token in sorted(reasons):
        if labels.has(token, LabelKind.OFFICIAL_TOKEN):
            continue
        added += labels.add(Label(token, LabelKind.SCAM_TOKEN, Provenance.VERIFIED,
                                  evidence=f"classifier flag; {reasons[token]}", generation=gen))
    if added:
        labels.generation = gen
    return added


# --------------------------------------------------------------------------- collusion

_RULES = (Provenance.COLLUSION_RULE1, Provenance.COLLUSION_RULE2,
          Provenance.COLLUSION_RULE3, Provenance.COLLUSION_RULE4)


def _cause_for(labels: LabelStore, address: str) -> tuple[str, LabelKind] | None:
    for kind in (LabelKind.SCAM_TOKEN_CREATOR, LabelKind.SCAM_POOL_CREATOR, LabelKind.COLLUSION_ADDRESS):
        if labels.has(address, kind):
            return (address, kind)
    return None


def detect_collusion(store: DataStore, labels: LabelStore, pool: str,
                     valuable_tokens: Iterable[str] = DEFAULT_VALUABLE_TOKENS) -> list[Label]:
    """Collusion addresses of one scam pool, discovered iteratively from its creators.

    Only money flows in valuable tokens between a pool participant and an
    already-known scam address of this pool count, on the right side in time
    of the participant's pool action (strict ordering by timestamp, tx hash,
    log index). Returns the new labels; ``labels`` is updated in place.
    """
    if not labels.has(pool, LabelKind.SCAM_POOL):
        raise PreconditionError(f"pool {pool} is not labeled ScamPool")
    valuable = set(valuable_tokens)
    info = store.pools[pool]
    excluded = set(labels.subjects(LabelKind.CONTRACT_DEPLOYER_EXCLUDED))
    scam_sides = {t for t in (info.token0, info.token1) if labels.has(t, LabelKind.SCAM_TOKEN)}

    known: dict[str, tuple[str, LabelKind]] = {}
    for token in sorted(scam_sides):
        creator = store.tokens[token].creator
        if creator not in excluded:
            known.setdefault(creator, _cause_for(labels, creator) or (token, LabelKind.SCAM_TOKEN))
    if info.creator not in excluded:
        known.setdefault(info.creator, _cause_for(labels, info.creator) or (pool, LabelKind.SCAM_POOL))

    first_mint: dict[str, tuple] = {}
    last_burn: dict[str, tuple] = {}
    last_buy: dict[str, tuple] = {}  # valuable -> scam
    first_sell: dict[str, tuple] = {}  # scam -> valuable
    tokens = (info.token0, info.token1)
    for e in store.pool_events(pool):
        a = e.initiator
        if e.kind is EventKind.MINT:
            first_mint.setdefault(a, e.key)
        elif e.kind is EventKind.BURN:
            last_burn[a] = e.key
        else:
            tin, tout = (tokens[0], tokens[1]) if e.zero_for_one else (tokens[1], tokens[0])
            if tin in valuable and tout in scam_sides:
                last_buy[a] = e.key
            elif tin in scam_sides and tout in valuable:
                first_sell.setdefault(a, e.key)
    participants = sorted(set(first_mint) | set(last_burn) | set(last_buy) | set(first_sell))

    new_labels: list[Label] = []
    iteration = 0
    while True:
        iteration += 1
        found: dict[str, tuple[Provenance, str]] = {}
        for a in participants:
            if a in known:
                continue
            incoming = [t for t in store.transfers_in.get(a, ()) if t.token in valuable and t.sender in known]
            outgoing = [t for t in store.transfers_out.get(a, ()) if t.token in valuable and t.recipient in known]
            hit = None
            if a in first_mint:
                hit = hit or next(((_RULES[0], t.sender) for t in incoming if t.key < first_mint[a]), None)
            if a in last_burn:
                hit = hit or next(((_RULES[1], t.recipient) for t in outgoing if t.key > last_burn[a]), None)
            if a in last_buy:
                hit = hit or next(((_RULES[2], t.sender) for t in incoming if t.key < last_buy[a]), None)
            if a in first_sell:
                hit = hit or next(((_RULES[3], t.recipient) for t in outgoing if t.key > first_sell[a]), None)
            if hit:
                found[a] = hit
        if not found:
            break
        gen = labels.generation + 1
        for a in sorted(found):
            rule, counterparty = found[a]
            label = Label(a, LabelKind.COLLUSION_ADDRESS, rule,
                          evidence=f"pool {pool}; {rule.value} via {counterparty}; iteration {iteration}",
                          cause=_cause_for(labels, counterparty) or known[counterparty],
                          generation=gen)
            if labels.add(label):
                new_labels.append(label)
            known[a] = (a, LabelKind.COLLUSION_ADDRESS)
        labels.generation = gen
    return new_labels


def run_collusion(store: DataStore, labels: LabelStore,
                  valuable_tokens: Iterable[str] = DEFAULT_VALUABLE_TOKENS) -> list[Label]:
    """Collusion detection over every scam pool until a full pass adds nothing."""
    valuable = frozenset(valuable_tokens)
    added: list[Label] = []
    while True:
        before = len(added)
        for pool in labels.subjects(LabelKind.SCAM_POOL):
            if pool in store.pools:
                added.extend(detect_collusion(store, labels, pool, valuable))
        if len(added) == before:
            return added
