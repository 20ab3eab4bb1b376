"""White-box safety checks over a finished :class:`~evaba.sim.Trace`.

Each check returns a list of human-readable violation strings; an empty
list means the property held on this run.
"""

from __future__ import annotations

from collections import Counter

from .engine import valid_value
from .sim import Trace


def agreement(tr: Trace) -> list[str]:
    vals = {v for v in tr.decisions.values() if v is not None}
    if len(vals) > 1:
        return [f"agreement: honest parties decided {sorted(vals)}"]
    return []


def external_validity(tr: Trace, validity=valid_value) -> list[str]:
    out = []
    promoted = {
        value for (view, proposer, step, value) in tr.observed_certs
        if proposer in tr.committees.get(view, ())
    }
    for i, v in tr.decisions.items():
        if v is None:
            continue
        if not validity(v):
            out.append(f"validity: party {i} decided invalid value {v!r}")
        if v not in promoted:
            out.append(f"validity: party {i} decided {v!r}, which no committee member promoted")
    return out


def pb_selected(tr: Trace) -> list[str]:
    return [
        f"pb-selected: certificate for non-committee proposer {p} in view {v} step {s}"
        for (v, p, s, _) in sorted(tr.observed_certs)
        if p not in tr.committees.get(v, ())
    ]


def pb_provability(tr: Trace) -> list[str]:
    seen: dict = {}
    out = []
    for (v, p, s, value) in sorted(tr.observed_certs):
        other = seen.setdefault((v, p, s), value)
        if other != value:
            out.append(f"pb-provability: two values certified for view {v} proposer {p} step {s}")
    return out


def pb_integrity(tr: Trace) -> list[str]:
    """No honest party ACKs the same broadcast twice (needs a recorded trace)."""
    acks = Counter(
        (ev[2], ev[3], ev[5]) for ev in tr.events
        if ev[1] == "send" and ev[4] == "ack" and ev[2] in tr.honest
    )
    # (signer, proposer, view) may repeat once per step; four steps at most
    return [f"pb-integrity: party {s} sent {c} ACKs to {p} in view {v}"
            for (s, p, v), c in acks.items() if c > 4]


def _holders(tr: Trace, view: int, proposer: int, slot: int, value: bytes) -> int:
    return sum(
        1 for i in tr.honest
        if tr.snapshots[i].promotions.get((view, proposer), (None, None, None))[slot] == value
    )


def lock_coverage(tr: Trace) -> list[str]:
    need = tr.n - 2 * tr.f
    out = []
    for (v, p, s, value) in sorted(tr.observed_certs):
        if s == 3:
            got = _holders(tr, v, p, 1, value)
            if got < need:
                out.append(f"lock-coverage: view {v} proposer {p}: {got} honest locks < {need}")
    return out


def key_coverage(tr: Trace) -> list[str]:
    need = tr.f + 1
    out = []
    for (v, p, s, value) in sorted(tr.observed_certs):
        if s == 2:
            got = _holders(tr, v, p, 0, value)
            if got < need:
                out.append(f"key-coverage: view {v} proposer {p}: {got} honest keys < {need}")
    return out


def value_consistency(tr: Trace) -> list[str]:
    slots: dict = {}
    for i in tr.honest:
        for key, vals in tr.snapshots[i].promotions.items():
            for v in vals:
                if v is not None:
                    slots.setdefault(key, set()).add(v)
    return [f"value-consistency: promotion {k} delivered {len(s)} values"
            for k, s in sorted(slots.items()) if len(s) > 1]


def committee_agreement(tr: Trace) -> list[str]:
    out = []
    for i in tr.honest:
        for v, members in tr.snapshots[i].committees.items():
            if members != tr.committees.get(v):
                out.append(f"committee: party {i} view {v} has {members}")
    return out


def leader_consistency(tr: Trace) -> list[str]:
    leaders: dict = {}
    for i in tr.honest:
        for v, ldr in tr.snapshots[i].leaders.items():
            leaders.setdefault(v, set()).add(ldr)
    out = [f"leader: view {v} elected {sorted(ls)}" for v, ls in sorted(leaders.items()) if len(ls) > 1]
    for v, ls in leaders.items():
        for ldr in ls:
            if ldr not in tr.committees.get(v, ()):
                out.append(f"leader: view {v} leader {ldr} not on the committee")
    return out


def safety_across_views(tr: Trace) -> list[str]:
    decided = [(s.decided_view, s.decided) for i, s in tr.snapshots.items()
               if i in tr.honest and s.decided is not None]
    if not decided:
        return []
    w, value = min(decided)
    return [
        f"cross-view: view {v} proposer {p} step {s} certified another value after decision in view {w}"
        for (v, p, s, val) in sorted(tr.observed_certs)
        if v > w and val != value
    ]


def eventual_delivery(tr: Trace) -> list[str]:
    if tr.pending_honest:
        return [f"delivery: {tr.pending_honest} envelopes still pending"]
    return []


ALL_CHECKS = (
    agreement, external_validity, pb_selected, pb_provability, lock_coverage, key_coverage,
    value_consistency, committee_agreement, leader_consistency, safety_across_views,
    eventual_delivery,
)


def violations(tr: Trace, validity=valid_value) -> list[str]:
    out: list[str] = []
    for check in ALL_CHECKS:
        out.extend(check(tr, validity) if check is external_validity else check(tr))
    if tr.events:
        out.extend(pb_integrity(tr))
    return out
