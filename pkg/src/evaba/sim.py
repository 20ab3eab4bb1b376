"""Deterministic discrete-event asynchronous network.

Time is logical: one tick per delivered envelope. A scheduler picks which
pending envelope goes next; every scheduler is fair because the run only
ends once the pending queue is empty.
"""

from __future__ import annotations

import gzip
import json
import random
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from .byzantine import (
    BEHAVIORS, Crash, Equivocate, Mute, RogueBroadcast, Scripted, WithholdShares, default_script,
)
from .codec import DecodeError, digest
from .crypto import CryptoParams, KeyMaterial, deal
from .engine import ALL, Party, valid_value
from .messages import (
    ACK, COMMITTEE_SHARE, DECIDE, ELECT_SHARE, KIND_NAMES, PROPOSE, SEND, SUGGEST,
    VIEW_CHANGE, AckMsg, KeyProof, committee_tag, decode, encoded_size,
)
from .pb import cert_valid

SCHEDULERS = ("fifo", "random", "honest-last", "target-delay")
MALFORMED = "Malformed"

PHASES = ("selection", "promotion", "propose", "suggest", "election", "view_change", "decide")
ADVERSARY_PHASES = ("rogue", "malformed")

_PHASE_OF = {
    COMMITTEE_SHARE: "selection",
    SEND: "promotion",
    ACK: "promotion",
    PROPOSE: "propose",
    SUGGEST: "suggest",
    ELECT_SHARE: "election",
    VIEW_CHANGE: "view_change",
    DECIDE: "decide",
}

_CARRIES_CERTS = frozenset((SEND, PROPOSE, SUGGEST, VIEW_CHANGE, DECIDE))


class ConfigError(ValueError):
    pass


@dataclass
class AdversaryConfig:
    scheduler: str = "random"
    behavior: str = "none"
    byzantine: tuple[int, ...] = ()
    seed: int = 0
    # how many parties to corrupt when ``byzantine`` is empty (default f)
    count: Optional[int] = None
    # target-delay: (from, to) pairs held back while anything else is pending;
    # ``delay`` overrides with an arbitrary predicate on (from, to, message).
    targets: tuple[tuple[int, int], ...] = ()
    delay: Optional[Callable] = None
    script: Optional[list] = None

    def check(self, n: int, f: int) -> None:
        if self.scheduler not in SCHEDULERS:
            raise ConfigError(f"unknown scheduler {self.scheduler!r}")
        if self.behavior != "none" and self.behavior not in BEHAVIORS:
            raise ConfigError(f"unknown behavior {self.behavior!r}")
        if len(set(self.byzantine)) != len(self.byzantine):
            raise ConfigError("duplicate Byzantine ids")
        if len(self.byzantine) > f:
            raise ConfigError(f"{len(self.byzantine)} Byzantine parties exceed f={f}")
        if any(not 1 <= b <= n for b in self.byzantine):
            raise ConfigError(f"Byzantine ids must lie in 1..{n}")
        if self.count is not None:
            if not 0 <= self.count <= f:
                raise ConfigError(f"{self.count} Byzantine parties exceed f={f}")
            if self.byzantine and len(self.byzantine) != self.count:
                raise ConfigError("Byzantine count disagrees with the id list")
        if self.behavior == "none" and (self.byzantine or self.count):
            raise ConfigError("Byzantine parties given but behavior is 'none'")


# Envelopes are plain tuples ``(frm, to, payload, msg, rogue)``; ``msg`` is
# None for raw Byzantine bytes, which the receiver has to decode itself.

# -- trace -----------------------------------------------------------------------

@dataclass
class Trace:
    n: int
    f: int
    kappa: int
    seed: int
    instance: int
    scheduler: str
    behavior: str
    byzantine: tuple[int, ...]
    max_views: int
    events: list = field(default_factory=list)
    counters: dict = field(default_factory=dict)
    snapshots: dict = field(default_factory=dict)
    committees: dict = field(default_factory=dict)
    observed_certs: set = field(default_factory=set)
    # rogue SENDs (proposer off the committee) that reached honest parties,
    # how honest parties dropped them, and any honest ACK for one
    rogue_to_honest: int = 0
    rogue_drops: dict = field(default_factory=dict)
    rogue_acked: int = 0
    honest_not_selected: int = 0
    pending_honest: int = 0
    ticks: int = 0
    status: str = "running"

    @property
    def honest(self) -> list[int]:
        return [i for i in range(1, self.n + 1) if i not in self.byzantine]

    @property
    def decisions(self) -> dict[int, Optional[bytes]]:
        return {i: self.snapshots[i].decided for i in self.honest}

    @property
    def views_to_decide(self) -> Optional[int]:
        views = [self.snapshots[i].decided_view for i in self.honest]
        if any(v is None for v in views):
            return None
        return max(views)

    def phase_totals(self, view: Optional[int] = None) -> dict[str, list[int]]:
        """``phase -> [messages, payload bytes, signature bytes]``."""
        out: dict[str, list[int]] = {}
        for (v, phase), row in self.counters.items():
            if view is not None and v != view:
                continue
            acc = out.setdefault(phase, [0, 0, 0])
            for k in range(3):
                acc[k] += row[k]
        return out

    def lines(self):
        """Line-delimited records with a fixed field order."""
        for ev in self.events:
            tick, kind, frm, to, tag, view, reason, detail = ev
            yield json.dumps(
                {"tick": tick, "kind": kind, "from": frm, "to": to, "msg": tag,
                 "view": view, "reason": reason, "detail": detail},
                separators=(",", ":"),
            )

    def to_text(self) -> str:
        return "".join(line + "\n" for line in self.lines())

    def write(self, path: str | Path) -> None:
        path = Path(path)
        data = self.to_text().encode()
        if path.suffix == ".gz":
            # name and mtime pinned so the gzip bytes depend on the content only
            with open(path, "wb") as fh, gzip.GzipFile(filename="", fileobj=fh, mode="wb", mtime=0) as gz:
                gz.write(data)
        else:
            path.write_bytes(data)


# -- run ---------------------------------------------------------------------------

def _pick_byzantine(n: int, f: int, adversary: AdversaryConfig) -> tuple[int, ...]:
    if adversary.byzantine:
        return tuple(sorted(adversary.byzantine))
    if adversary.behavior == "none":
        return ()
    k = f if adversary.count is None else adversary.count
    rng = random.Random(adversary.seed ^ 0x5EED)
    return tuple(sorted(rng.sample(range(1, n + 1), k)))


def committee_of(keys: KeyMaterial, instance: int, view: int, kappa: int) -> tuple[int, ...]:
    """The committee any honest party computes for ``view`` (using all coin shares)."""
    scheme = keys.scheme()
    tag = committee_tag(instance, view)
    shares = [keys.secret(i).coin_share(tag) for i in range(1, keys.params.f + 2)]
    return scheme.coin_toss(tag, shares, keys.params.n, kappa)


def run(
    params: CryptoParams,
    adversary: AdversaryConfig,
    values: Optional[dict[int, bytes]] = None,
    max_views: int = 20,
    kappa: Optional[int] = None,
    instance: int = 0,
    keys: Optional[KeyMaterial] = None,
    validity: Callable[[bytes], bool] = valid_value,
    record: bool = True,
) -> Trace:
    """Run one agreement instance to quiescence and return its trace.

    The run is a pure function of its arguments. Hitting ``max_views`` is
    reported through ``Trace.status``, not raised.
    """
    params.check()
    n, f = params.n, params.f
    kappa = f + 1 if kappa is None else kappa
    if not 1 <= kappa <= n:
        raise ConfigError(f"kappa={kappa} outside 1..{n}")
    adversary.check(n, f)
    byz = _pick_byzantine(n, f, adversary)
    keys = keys or deal(params)
    scheme = keys.scheme()
    values = values or {i: b"value-%d" % i for i in range(1, n + 1)}
    byz_set = frozenset(byz)

    trace = Trace(n=n, f=f, kappa=kappa, seed=adversary.seed, instance=instance,
                  scheduler=adversary.scheduler, behavior=adversary.behavior,
                  byzantine=byz, max_views=max_views)

    parties: dict = {}
    for i in range(1, n + 1):
        if i in byz_set and adversary.behavior == "scripted":
            script = adversary.script
            if script is None:
                script = default_script(i, n, instance, adversary.seed * 7919 + i)
            parties[i] = Scripted(i, n, script)
            continue
        p = Party(i, keys, values[i], kappa=kappa, validity=validity, instance=instance,
                  max_views=max_views, scheme=scheme)
        p.verbose = record
        if i not in byz_set:
            parties[i] = p
        elif adversary.behavior == "crash":
            parties[i] = Crash(p, n)
        elif adversary.behavior == "mute":
            parties[i] = Mute(p, n)
        elif adversary.behavior == "equivocate":
            parties[i] = Equivocate(p, n)
        elif adversary.behavior == "rogue-broadcast":
            parties[i] = RogueBroadcast(p, n, adversary.seed * 104729 + i)
        elif adversary.behavior == "withhold-shares":
            parties[i] = WithholdShares(p, n)
        else:
            raise ConfigError(f"Byzantine ids given but behavior is {adversary.behavior!r}")

    # Scheduling: ``urgent`` envelopes go first, in random order (FIFO for the
    # fifo policy); ``held`` ones (two-tier policies) only once nothing else
    # is pending, oldest first. Every policy is fair since the run drains both.
    rng = random.Random(adversary.seed)
    fifo = adversary.scheduler == "fifo"
    urgent = deque() if fifo else []
    held: deque = deque()
    is_held: Optional[Callable] = None
    if adversary.scheduler == "honest-last":
        is_held = lambda e: e[0] not in byz_set  # noqa: E731
    elif adversary.scheduler == "target-delay":
        pred = adversary.delay
        if pred is None:
            targets = set(adversary.targets)
            if not targets:
                h = min(i for i in range(1, n + 1) if i not in byz_set)
                targets = {(h, j) for j in range(1, n + 1)}
            is_held = lambda e: (e[0], e[1]) in targets  # noqa: E731
        else:
            is_held = lambda e: pred(e[0], e[1], e[3])  # noqa: E731

    committees: dict[int, tuple[int, ...]] = {}

    def committee(view: int) -> tuple[int, ...]:
        c = committees.get(view)
        if c is None:
            c = committees[view] = committee_of(keys, instance, view, kappa)
        return c

    # only these behaviors can put a non-member's SEND on the wire
    watch_rogue = adversary.behavior in ("rogue-broadcast", "scripted")
    events = trace.events
    counters = trace.counters
    observed = trace.observed_certs
    cert_cache: dict = {}
    decoded: dict[bytes, object] = {}
    urgent_extend = urgent.extend
    tick = 0

    def emit(frm: int, out) -> None:
        for to, msg in out:
            if to != ALL and msg.__class__ is AckMsg:
                # unicast ACKs dominate the traffic and carry no certificates
                size, sig_len = encoded_size(msg)
                view = msg.pb.view
                if watch_rogue and frm not in byz_set and msg.pb.proposer not in committee(view):
                    trace.rogue_acked += 1
                row = counters.get((view, "promotion"))
                if row is None:
                    row = counters[(view, "promotion")] = [0, 0, 0]
                row[0] += 1
                row[1] += size - sig_len
                row[2] += sig_len
                e = (frm, to, None, msg, False)
                if is_held is None or not is_held(e):
                    urgent.append(e)
                else:
                    held.append(e)
                if record:
                    events.append((tick, "send", frm, to, "ack", view, None, None))
                continue
            if isinstance(msg, (bytes, bytearray)):
                payload = bytes(msg)
                size, sig_len = len(payload), 0
                phase, view, tag = "malformed", 0, "raw"
                msg = None
                rogue = False
            else:
                # structured messages travel as objects; only their wire size
                # is needed, and decode(encode(m)) == m is covered by tests
                payload = None
                size, sig_len = encoded_size(msg)
                kind = msg.kind
                view = msg.view
                tag = KIND_NAMES[kind]
                phase = _PHASE_OF[kind]
                rogue = kind == SEND and msg.pb.proposer not in committee(view)
                if rogue:
                    phase = "rogue"
                if kind in _CARRIES_CERTS:
                    scan(msg)
            recipients = range(1, n + 1) if to == ALL else (to,)
            row = counters.get((view, phase))
            if row is None:
                row = counters[(view, phase)] = [0, 0, 0]
            k = len(recipients)
            row[0] += k
            row[1] += k * (size - sig_len)
            row[2] += k * sig_len
            envs = [(frm, r, payload, msg, rogue) for r in recipients]
            if is_held is None:
                urgent_extend(envs)
            else:
                for e in envs:
                    (held if is_held(e) else urgent).append(e)
            if record:
                for r in recipients:
                    events.append((tick, "send", frm, r, tag, view, None, None))

    def scan(msg) -> None:
        # every envelope is delivered before the run ends, so scanning at
        # send time sees exactly the certificates that get delivered
        for view, proposer, step, value, cert in carried_certs(msg):
            key = (view, proposer, step, value, cert)
            ok = cert_cache.get(key)
            if ok is None:
                ok = cert_cache[key] = cert_valid(scheme, instance, view, proposer, step, value, cert)
            if ok:
                observed.add((view, proposer, step, value))

    def drain(pid: int, evs: list) -> None:
        for ev in evs:
            k = ev[0]
            if k == "drop":
                _, view, kind, frm, reason, dropped = ev
                if kind == SEND and pid not in byz_set:
                    if reason == "NotSelected":
                        trace.honest_not_selected += 1
                    pb = dropped.pb
                    if pb.proposer not in committee(pb.view):
                        trace.rogue_drops[reason] = trace.rogue_drops.get(reason, 0) + 1
                if record:
                    events.append((tick, "drop", frm, pid, KIND_NAMES[kind], view, reason, None))
            else:
                if k == "cert":
                    observed.add(ev[1:5])
                if record:
                    events.append((tick, "state", pid, None, k, ev[1], None, _detail(ev[2:])))
        evs.clear()

    for i in range(1, n + 1):
        party = parties[i]
        out = party.start()
        if party.events:
            drain(i, party.events)
        emit(i, out)

    rnd = rng.random
    while True:
        if urgent:
            if fifo:
                e = urgent.popleft()
            else:
                i = int(rnd() * len(urgent))
                e = urgent.pop()
                if i < len(urgent):
                    e, urgent[i] = urgent[i], e
        elif held:
            e = held.popleft()
        else:
            break
        frm, to, payload, msg, rogue = e
        tick += 1
        if msg is None:
            msg = decoded.get(payload, _MISSING)
            if msg is _MISSING:
                try:
                    msg = decode(payload)
                except DecodeError:
                    msg = None
                decoded[payload] = msg
                if msg is not None:
                    scan(msg)
            if msg is None:
                if record:
                    events.append((tick, "drop", frm, to, "raw", 0, MALFORMED, None))
                continue
        if rogue and to not in byz_set:
            trace.rogue_to_honest += 1
        if record:
            events.append((tick, "deliver", frm, to, KIND_NAMES[msg.kind], msg.view, None, None))
        party = parties[to]
        out = party.handle(frm, msg)
        if party.events:
            drain(to, party.events)
        if out:
            emit(to, out)

    trace.ticks = tick
    trace.pending_honest = len(urgent) + len(held)
    for i, p in parties.items():
        snap = p.snapshot()
        if snap is not None:
            trace.snapshots[i] = snap
    top = max(s.view for s in trace.snapshots.values())
    trace.committees = {v: committee(v) for v in range(1, top + 1)}
    hon = trace.honest
    if all(trace.snapshots[i].decided is not None for i in hon):
        trace.status = "decided"
    elif any(trace.snapshots[i].halted for i in hon):
        trace.status = "max-views"
    else:
        trace.status = "stalled"
    if record:
        for i in hon:
            s = trace.snapshots[i]
            events.append((tick, "final", i, None, None, s.view, trace.status,
                           s.decided.hex() if s.decided is not None else None))
    return trace


_MISSING = object()


def _detail(fields) -> str:
    parts = []
    for x in fields:
        if isinstance(x, bytes):
            # values are shown by digest prefix
            parts.append(digest(x).hex()[:16])
        elif isinstance(x, tuple):
            parts.append("[" + ",".join(map(str, x)) + "]")
        else:
            parts.append(str(x))
    return " ".join(parts)


def carried_certs(msg):
    """``(view, proposer, step, value, cert)`` for every certificate inside ``msg``."""
    k = msg.kind
    if k == SEND:
        pb = msg.pb
        if pb.step > 1:
            yield pb.view, pb.proposer, pb.step - 1, msg.value, msg.proof
        elif isinstance(msg.proof, KeyProof) and msg.proof.cert is not None:
            yield msg.proof.view, msg.proof.leader, 1, msg.value, msg.proof.cert
    elif k == PROPOSE:
        yield msg.view, msg.proposer, 4, msg.value, msg.cert
    elif k == SUGGEST:
        yield msg.view, msg.proposer, 4, msg.value, msg.cert
    elif k == VIEW_CHANGE:
        for step, d in ((3, msg.commit), (2, msg.lock), (1, msg.key)):
            if d is not None:
                yield msg.view, msg.leader, step, d.value, d.cert
    elif k == DECIDE:
        yield msg.view, msg.leader, 3, msg.value, msg.cert
