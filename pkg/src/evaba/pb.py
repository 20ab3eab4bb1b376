"""Prioritized provable broadcast.

A sender multicasts ``(value, proof)``; a receiver ACKs with a signature
share only when the sender sits on the view's committee, the message is the
first for its id, the payload passes the external validity check and the
promotion has not been abandoned. ``n - f`` shares combine into the
delivery certificate.
"""

from __future__ import annotations

from collections import Counter
from typing import Callable, Mapping, Optional

from .codec import digest
from .crypto import PartySecret, SignShare, ThresholdScheme, ThresholdSignature
from .messages import AckMsg, KeyProof, PbId, SendMsg, signed_digest

NOT_SELECTED = "NotSelected"
DUPLICATE = "Duplicate"
INVALID_PROOF = "InvalidProof"
ABANDONED = "Abandoned"
WRONG_SENDER = "WrongSender"
INVALID_SHARE = "InvalidShare"


class Abandoned(Exception):
    """A promotion was abandoned before it completed."""


def cert_valid(
    scheme: ThresholdScheme,
    instance: int,
    view: int,
    proposer: int,
    step: int,
    value: bytes,
    cert: Optional[ThresholdSignature],
) -> bool:
    if cert is None:
        return False
    return scheme.threshold_validate_digest(cert, signed_digest(instance, view, proposer, step, value))


def ex_pb_val(
    msg: SendMsg,
    scheme: ThresholdScheme,
    validity: Callable[[bytes], bool],
    lock: int,
    leaders: Mapping[int, int],
) -> bool:
    """External validity of a SEND.

    Step 1 needs an application-valid value and a key from a view no older
    than the receiver's ``lock``; the key of view ``v > 0`` must be the
    step-1 certificate of the leader the receiver elected in ``v``. Later
    steps need the certificate of the previous step on the same value.
    """
    pb = msg.pb
    if pb.step == 1:
        key = msg.proof
        if not isinstance(key, KeyProof) or not validity(msg.value):
            return False
        if key.view < lock or key.view >= pb.view:
            return False
        if key.view == 0:
            return key.cert is None
        if leaders.get(key.view) != key.leader:
            return False
        return cert_valid(scheme, pb.instance, key.view, key.leader, 1, msg.value, key.cert)
    if not isinstance(msg.proof, ThresholdSignature):
        return False
    return cert_valid(scheme, pb.instance, pb.view, pb.proposer, pb.step - 1, msg.value, msg.proof)


class PbSender:
    """Sender side of one broadcast: multicast, then collect ``n - f`` ACKs."""

    def __init__(self, scheme: ThresholdScheme, pb: PbId, value: bytes, proof):
        self.scheme = scheme
        self.pb = pb
        self.value = value
        self.proof = proof
        self.signed_digest = signed_digest(pb.instance, pb.view, pb.proposer, pb.step, value)
        self.shares: dict[int, SignShare] = {}
        self.result: Optional[ThresholdSignature] = None
        self.abandoned = False

    def send_msg(self) -> SendMsg:
        return SendMsg(self.pb, self.value, self.proof)

    def on_ack(self, msg: AckMsg, frm: int) -> Optional[ThresholdSignature]:
        """Returns the certificate once, when the ``n - f``-th valid share lands."""
        if self.abandoned or self.result is not None:
            return None
        share = msg.share
        if msg.signer != frm or share.signer != frm or frm in self.shares:
            return None
        if not self.scheme.share_validate_digest(share, self.signed_digest):
            return None
        self.shares[frm] = share
        if len(self.shares) == self.scheme.params.n - self.scheme.params.f:
            self.result = self.scheme.combine_digest(self.shares.values(), self.signed_digest)
            return self.result
        return None


class PbReceiver:
    """Receiver side for all broadcasts of one view at one party."""

    def __init__(self, scheme: ThresholdScheme, secret: PartySecret):
        self.scheme = scheme
        self.secret = secret
        self.seen: set[tuple[int, int]] = set()
        self.abandoned: set[int] = set()
        self.abandon_all = False
        self.acked: set[PbId] = set()
        self.dropped: Counter[str] = Counter()

    def abandon(self, proposer: Optional[int] = None) -> bool:
        """Stop ACKing one proposer's promotion (or all of them); idempotent."""
        if proposer is None:
            changed = not self.abandon_all
            self.abandon_all = True
        else:
            changed = proposer not in self.abandoned
            self.abandoned.add(proposer)
        return changed

    def is_abandoned(self, proposer: int) -> bool:
        return self.abandon_all or proposer in self.abandoned

    def on_send(
        self,
        msg: SendMsg,
        frm: int,
        committee,
        validate: Callable[[SendMsg], bool],
    ) -> tuple[Optional[AckMsg], Optional[str]]:
        """Decide whether to ACK; returns ``(ack, None)`` or ``(None, reason)``."""
        pb = msg.pb
        if frm != pb.proposer:
            return self._drop(WRONG_SENDER)
        # membership first: cheap rejection before any crypto
        if pb.proposer not in committee:
            return self._drop(NOT_SELECTED)
        key = (pb.proposer, pb.step)
        if key in self.seen:
            return self._drop(DUPLICATE)
        self.seen.add(key)
        if self.abandon_all or pb.proposer in self.abandoned:
            return self._drop(ABANDONED)
        if not validate(msg):
            return self._drop(INVALID_PROOF)
        self.acked.add(pb)
        share = self.secret.sign_share_digest(
            signed_digest(pb.instance, pb.view, pb.proposer, pb.step, msg.value))
        return AckMsg(pb, self.secret.party, share), None

    def _drop(self, reason: str):
        self.dropped[reason] += 1
        return None, reason
