import itertools

import pytest

from evaba.committee import Committee
from evaba.engine import valid_value
from evaba.messages import AckMsg, KeyProof, PbId, SendMsg
from evaba.pb import (
    ABANDONED, DUPLICATE, INVALID_PROOF, NOT_SELECTED, WRONG_SENDER, PbReceiver, PbSender, ex_pb_val,
)

GENESIS = KeyProof(0, 0, None)
COMMITTEE = Committee(1, (1, 2))


def validate(keys, lock=0, leaders=None):
    scheme = keys.scheme()
    return lambda m: ex_pb_val(m, scheme, valid_value, lock, leaders or {})


def step1(view=1, proposer=1, value=b"value-a", key=GENESIS):
    return SendMsg(PbId(0, view, proposer, 1), value, key)


class TestExPbVal:
    def test_genesis(self, keys4):
        assert validate(keys4)(step1())
        assert not validate(keys4)(step1(value=b"junk"))

    def test_key_from_previous_view(self, keys4, cert_for):
        key = KeyProof(1, 3, cert_for(keys4, 0, 1, 3, 1, b"value-k"))
        msg = step1(view=2, value=b"value-k", key=key)
        assert validate(keys4, lock=0, leaders={1: 3})(msg)
        assert validate(keys4, lock=1, leaders={1: 3})(msg)
        assert not validate(keys4, lock=2, leaders={1: 3})(msg)

    def test_key_must_match_elected_leader(self, keys4, cert_for):
        key = KeyProof(1, 3, cert_for(keys4, 0, 1, 3, 1, b"value-k"))
        msg = step1(view=2, value=b"value-k", key=key)
        assert not validate(keys4, leaders={1: 2})(msg)
        assert not validate(keys4, leaders={})(msg)

    def test_key_must_certify_the_value(self, keys4, cert_for):
        key = KeyProof(1, 3, cert_for(keys4, 0, 1, 3, 1, b"value-k"))
        assert not validate(keys4, leaders={1: 3})(step1(view=2, value=b"value-other", key=key))

    def test_key_step_must_be_one(self, keys4, cert_for):
        key = KeyProof(1, 3, cert_for(keys4, 0, 1, 3, 2, b"value-k"))
        assert not validate(keys4, leaders={1: 3})(step1(view=2, value=b"value-k", key=key))

    def test_key_view_must_be_older(self, keys4, cert_for):
        key = KeyProof(2, 3, cert_for(keys4, 0, 2, 3, 1, b"value-k"))
        assert not validate(keys4, leaders={2: 3})(step1(view=2, value=b"value-k", key=key))

    def test_genesis_only_while_unlocked(self, keys4, cert_for):
        assert not validate(keys4, lock=1)(step1(view=2))
        bogus = KeyProof(0, 0, cert_for(keys4, 0, 1, 1, 1, b"value-a"))
        assert not validate(keys4)(step1(key=bogus))

    def test_later_steps_chain(self, keys4, cert_for):
        c2 = cert_for(keys4, 0, 1, 1, 2, b"value-a")
        ok = SendMsg(PbId(0, 1, 1, 3), b"value-a", c2)
        assert validate(keys4)(ok)
        c1 = cert_for(keys4, 0, 1, 1, 1, b"value-a")
        assert not validate(keys4)(SendMsg(PbId(0, 1, 1, 3), b"value-a", c1))
        assert not validate(keys4)(SendMsg(PbId(0, 1, 1, 3), b"value-b", c2))
        assert not validate(keys4)(SendMsg(PbId(0, 1, 1, 3), b"value-a", GENESIS))


class TestReceiver:
    def receiver(self, keys, me=3):
        return PbReceiver(keys.scheme(), keys.secret(me))

    def test_ack_valid_send(self, keys4):
        r = self.receiver(keys4)
        ack, reason = r.on_send(step1(), 1, COMMITTEE, validate(keys4))
        assert reason is None
        assert ack.signer == 3 and ack.pb == PbId(0, 1, 1, 1)
        assert PbId(0, 1, 1, 1) in r.acked

    def test_not_selected(self, keys4):
        r = self.receiver(keys4)
        ack, reason = r.on_send(step1(proposer=4), 4, COMMITTEE, validate(keys4))
        assert ack is None and reason == NOT_SELECTED
        assert not r.acked

    def test_wrong_sender(self, keys4):
        ack, reason = self.receiver(keys4).on_send(step1(), 2, COMMITTEE, validate(keys4))
        assert reason == WRONG_SENDER

    def test_first_send_only(self, keys4):
        r = self.receiver(keys4)
        r.on_send(step1(value=b"value-a"), 1, COMMITTEE, validate(keys4))
        ack, reason = r.on_send(step1(value=b"value-b"), 1, COMMITTEE, validate(keys4))
        assert ack is None and reason == DUPLICATE

    def test_invalid_proof(self, keys4, cert_for):
        c1 = cert_for(keys4, 0, 1, 1, 1, b"value-a")
        bad = SendMsg(PbId(0, 1, 1, 3), b"value-a", c1)
        _, reason = self.receiver(keys4).on_send(bad, 1, COMMITTEE, validate(keys4))
        assert reason == INVALID_PROOF

    def test_abandon_then_send(self, keys4):
        r = self.receiver(keys4)
        assert r.abandon(1)
        assert not r.abandon(1)
        _, reason = r.on_send(step1(), 1, COMMITTEE, validate(keys4))
        assert reason == ABANDONED
        ack, _ = r.on_send(step1(proposer=2), 2, COMMITTEE, validate(keys4))
        assert ack is not None

    def test_ack_then_abandon_blocks_next_step(self, keys4, cert_for):
        r = self.receiver(keys4)
        assert r.on_send(step1(), 1, COMMITTEE, validate(keys4))[0] is not None
        assert r.abandon()
        assert not r.abandon()
        c1 = cert_for(keys4, 0, 1, 1, 1, b"value-a")
        _, reason = r.on_send(SendMsg(PbId(0, 1, 1, 2), b"value-a", c1), 1, COMMITTEE, validate(keys4))
        assert reason == ABANDONED


def test_sender_completes_at_quorum(keys4):
    scheme = keys4.scheme()
    sender = PbSender(scheme, PbId(0, 1, 1, 1), b"value-a", GENESIS)
    msg = sender.send_msg()
    acks = [PbReceiver(scheme, keys4.secret(i)).on_send(msg, 1, COMMITTEE, validate(keys4))[0]
            for i in range(1, 5)]
    assert sender.on_ack(acks[0], 1) is None
    assert sender.on_ack(acks[0], 1) is None
    assert sender.on_ack(acks[1], 3) is None  # claimed sender mismatch
    assert sender.on_ack(acks[1], 2) is None
    cert = sender.on_ack(acks[2], 3)
    assert cert is not None and scheme.threshold_validate_digest(cert, sender.signed_digest)
    assert sender.on_ack(acks[3], 4) is None


def test_non_member_never_completes(keys4):
    scheme = keys4.scheme()
    msg = step1(proposer=4)
    acks = [PbReceiver(scheme, keys4.secret(i)).on_send(msg, 4, COMMITTEE, validate(keys4))[0]
            for i in range(1, 5)]
    assert acks == [None] * 4


def test_equivocation_quorum_intersection(keys4):
    """Whatever order the two values arrive in, at most one gets n - f ACKs."""
    scheme = keys4.scheme()
    va, vb = step1(value=b"value-a"), step1(value=b"value-b")
    for first in itertools.product((va, vb), repeat=4):
        counts = {b"value-a": 0, b"value-b": 0}
        for i, m in enumerate(first, start=1):
            r = PbReceiver(scheme, keys4.secret(i))
            for msg in (m, vb if m is va else va):
                ack, _ = r.on_send(msg, 1, COMMITTEE, validate(keys4))
                if ack is not None:
                    counts[msg.value] += 1
        assert sum(c >= 3 for c in counts.values()) <= 1
