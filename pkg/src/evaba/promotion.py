"""Four-step proposal promotion built from chained prioritized broadcasts."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .crypto import ThresholdScheme, ThresholdSignature
from .messages import AckMsg, Deliverable, KeyProof, PbId, SendMsg
from .pb import Abandoned, PbSender

STEPS = 4


@dataclass
class PromotionState:
    """What a receiver delivered for one ``(view, proposer)`` promotion."""

    prepare: Optional[Deliverable] = None
    lock: Optional[Deliverable] = None
    commit: Optional[Deliverable] = None

    def on_delivery(self, step: int, value: bytes, cert) -> Optional[str]:
        """Store the certificate carried by an accepted SEND of ``step``.

        Step 2 carries the step-1 certificate (key), step 3 the step-2
        certificate (lock), step 4 the step-3 certificate (commit).
        Returns the slot name written, if any.
        """
        if step == 2 and self.prepare is None:
            self.prepare = Deliverable(value, cert)
            return "prepare"
        if step == 3 and self.lock is None:
            self.lock = Deliverable(value, cert)
            return "lock"
        if step == 4 and self.commit is None:
            self.commit = Deliverable(value, cert)
            return "commit"
        return None


class PromotionTable:
    def __init__(self):
        self._slots: dict[tuple[int, int], PromotionState] = {}

    def state(self, view: int, proposer: int) -> PromotionState:
        key = (view, proposer)
        st = self._slots.get(key)
        if st is None:
            st = self._slots[key] = PromotionState()
        return st

    def on_delivery(self, pb: PbId, value: bytes, cert) -> Optional[str]:
        return self.state(pb.view, pb.proposer).on_delivery(pb.step, value, cert)

    def get_prepare(self, view: int, proposer: int) -> Optional[Deliverable]:
        st = self._slots.get((view, proposer))
        return st.prepare if st else None

    def get_lock(self, view: int, proposer: int) -> Optional[Deliverable]:
        st = self._slots.get((view, proposer))
        return st.lock if st else None

    def get_commit(self, view: int, proposer: int) -> Optional[Deliverable]:
        st = self._slots.get((view, proposer))
        return st.commit if st else None

    def items(self):
        return self._slots.items()


@dataclass(frozen=True)
class PromotionResult:
    value: bytes
    cert: ThresholdSignature


class Promotion:
    """Sender-side driver: step ``k``'s certificate is step ``k+1``'s proof."""

    def __init__(self, scheme: ThresholdScheme, instance: int, view: int, proposer: int,
                 value: bytes, key: KeyProof):
        self.scheme = scheme
        self.instance = instance
        self.view = view
        self.proposer = proposer
        self.value = value
        self.certs: list[ThresholdSignature] = []
        self.result: Optional[PromotionResult] = None
        self.abandoned = False
        self.current = PbSender(scheme, PbId(instance, view, proposer, 1), value, key)

    @property
    def step(self) -> int:
        return self.current.pb.step

    def start(self) -> SendMsg:
        return self.current.send_msg()

    def on_ack(self, msg: AckMsg, frm: int) -> Union[SendMsg, PromotionResult, None]:
        """Feed an ACK; returns the next SEND, the final result, or nothing."""
        if self.abandoned or self.result is not None:
            return None
        pb, cur = msg.pb, self.current.pb
        if pb is not cur and pb != cur:
            return None
        cert = self.current.on_ack(msg, frm)
        if cert is None:
            return None
        self.certs.append(cert)
        if self.step == STEPS:
            self.result = PromotionResult(self.value, cert)
            return self.result
        pb = PbId(self.instance, self.view, self.proposer, self.step + 1)
        self.current = PbSender(self.scheme, pb, self.value, cert)
        return self.current.send_msg()

    def abandon(self) -> None:
        if self.result is None:
            self.abandoned = True
            self.current.abandoned = True

    def outcome(self) -> PromotionResult:
        if self.abandoned:
            raise Abandoned(f"promotion of view {self.view} abandoned at step {self.step}")
        if self.result is None:
            raise RuntimeError("promotion still running")
        return self.result
