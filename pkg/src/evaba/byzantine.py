"""Byzantine party shells.

Each shell wraps an honest :class:`~evaba.engine.Party` (or nothing) and
rewrites what reaches the wire. Shells may also emit raw ``bytes`` payloads,
which the simulator sends without encoding; that is how malformed-input
fuzzing reaches honest parsers.
"""

from __future__ import annotations

import random
from typing import Optional

from .codec import digest
from .crypto import CoinShare, SignShare, ThresholdSignature
from .engine import ALL, Party
from .messages import (
    ACK, COMMITTEE_SHARE, ELECT_SHARE, SEND,
    AckMsg, CommitteeShareMsg, DecideMsg, KeyProof, PbId, SendMsg, ack_message, encode,
)

BEHAVIORS = ("crash", "mute", "equivocate", "rogue-broadcast", "withhold-shares", "scripted")


class Shell:
    honest = False
    behavior = "none"

    def __init__(self, inner: Optional[Party], n: int):
        self.inner = inner
        self.n = n
        self.me = inner.me if inner else 0
        # the inner party's list, shared so the simulator can drain it
        self.events = inner.events if inner else []

    def start(self):
        return self._filter(self.inner.start())

    def handle(self, frm, msg):
        return self._filter(self.inner.handle(frm, msg))

    def _filter(self, out):
        return out

    def snapshot(self):
        return self.inner.snapshot() if self.inner else None


class Crash(Shell):
    """Sends its view-1 opening messages, then stops for good."""

    behavior = "crash"

    def handle(self, frm, msg):
        return []


class Mute(Shell):
    """Processes everything, sends nothing."""

    behavior = "mute"

    def _filter(self, out):
        return []


class WithholdShares(Shell):
    """Never ACKs and never releases coin shares; otherwise honest."""

    behavior = "withhold-shares"
    _held = (ACK, COMMITTEE_SHARE, ELECT_SHARE)

    def _filter(self, out):
        return [(to, m) for to, m in out if m.kind not in self._held]


class Equivocate(Shell):
    """As a committee member, sends one value to the low half of the parties
    and a different (still valid) value to the high half in step 1."""

    behavior = "equivocate"

    def _filter(self, out):
        res = []
        half = self.n // 2
        for to, m in out:
            if m.kind == SEND and m.pb.step == 1 and to == ALL:
                alt = SendMsg(m.pb, m.value + b"-alt", KeyProof(0, 0, None))
                res.extend((r, m) for r in range(1, half + 1))
                res.extend((r, alt) for r in range(half + 1, self.n + 1))
            else:
                res.append((to, m))
        return res


class RogueBroadcast(Shell):
    """Behaves honestly, and in every view where it is *not* on the committee
    pushes a full 4-step SEND sequence with fabricated certificates."""

    behavior = "rogue-broadcast"

    def __init__(self, inner: Party, n: int, seed: int):
        super().__init__(inner, n)
        self._rng = random.Random(seed)
        self._done: set[int] = set()

    def _filter(self, out):
        p = self.inner
        v = p.view
        c = p.committee(v)
        if c is not None and p.me not in c and v not in self._done:
            self._done.add(v)
            out = list(out)
            value = b"value-rogue-%d" % p.me
            for step in range(1, 5):
                pb = PbId(p.instance, v, p.me, step)
                if step == 1:
                    proof = KeyProof(0, 0, None)
                else:
                    d = digest(ack_message(p.instance, v, p.me, step - 1, digest(value)))
                    proof = ThresholdSignature(d, self._rng.randbytes(32))
                out.append((ALL, SendMsg(pb, value, proof)))
        return out


class Scripted(Shell):
    """Replays a fixed outbound list at start and ignores all input."""

    behavior = "scripted"

    def __init__(self, me: int, n: int, script):
        super().__init__(None, n)
        self.me = me
        self.script = list(script)

    def start(self):
        return list(self.script)

    def handle(self, frm, msg):
        return []


def default_script(me: int, n: int, instance: int, seed: int) -> list:
    """Junk and forged traffic aimed at every other party."""
    rng = random.Random(seed)
    fake = lambda: rng.randbytes(32)  # noqa: E731
    send = SendMsg(PbId(instance, 1, me, 2), b"value-forged", ThresholdSignature(fake(), fake()))
    wire = encode(send)
    script: list = []
    for to in range(1, n + 1):
        if to == me:
            continue
        script.append((to, rng.randbytes(rng.randrange(0, 48))))
        script.append((to, wire[: rng.randrange(1, len(wire))]))
        script.append((to, wire + b"\x00"))
        script.append((to, send))
        script.append((to, AckMsg(PbId(instance, 1, to, 1), me, SignShare(me, fake(), fake()))))
        script.append((to, CommitteeShareMsg(1, me, CoinShare(me, fake(), fake()))))
        script.append((to, DecideMsg(1, me, to, b"value-forged", ThresholdSignature(fake(), fake()), (), ())))
    return script
