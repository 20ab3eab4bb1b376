"""Protocol messages, their wire codec, and the byte strings parties sign."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

from .codec import Decoder, DecodeError, Encoder, digest
from .crypto import CoinShare, SignShare, ThresholdSignature

DIGEST_LEN = 32

COMMITTEE_SHARE = 1
SEND = 2
ACK = 3
PROPOSE = 4
SUGGEST = 5
ELECT_SHARE = 6
VIEW_CHANGE = 7
DECIDE = 8

KIND_NAMES = {
    COMMITTEE_SHARE: "committee-share",
    SEND: "send",
    ACK: "ack",
    PROPOSE: "propose",
    SUGGEST: "suggest",
    ELECT_SHARE: "elect-share",
    VIEW_CHANGE: "view-change",
    DECIDE: "decide",
}

_ACK_TAG = 0x10
_COIN_TAG = 0x20


# -- signable byte strings ---------------------------------------------------

_ACK_HEAD = struct.Struct(">BIIIB")


def ack_message(instance: int, view: int, proposer: int, step: int, value_digest: bytes) -> bytes:
    """Bytes an ACK share (and the resulting certificate) signs."""
    return _ACK_HEAD.pack(_ACK_TAG, instance, view, proposer, step) + value_digest


@lru_cache(maxsize=4096)
def signed_digest(instance: int, view: int, proposer: int, step: int, value: bytes) -> bytes:
    """Digest of :func:`ack_message` for ``value``; pure, so memoised."""
    return digest(ack_message(instance, view, proposer, step, digest(value)))


@lru_cache(maxsize=4096)
def committee_tag(instance: int, view: int) -> bytes:
    return Encoder(_COIN_TAG).blob(b"cs").u32(instance).u32(view).bytes()


@lru_cache(maxsize=4096)
def elect_tag(instance: int, view: int) -> bytes:
    return Encoder(_COIN_TAG).blob(b"elect").u32(instance).u32(view).bytes()


# -- message types -------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class PbId:
    instance: int
    view: int
    proposer: int
    step: int

    def signed_bytes(self, value_digest: bytes) -> bytes:
        return ack_message(self.instance, self.view, self.proposer, self.step, value_digest)


@dataclass(frozen=True, slots=True)
class KeyProof:
    """Step-1 justification: the proposer's adopted key.

    ``view == 0`` is the genesis key and carries no certificate; otherwise
    ``cert`` is the step-1 certificate of ``leader``'s promotion in ``view``.
    """

    view: int
    leader: int
    cert: Optional[ThresholdSignature]


@dataclass(frozen=True, slots=True)
class Deliverable:
    value: bytes
    cert: ThresholdSignature


@dataclass(frozen=True, slots=True)
class CommitteeShareMsg:
    view: int
    sender: int
    share: CoinShare
    kind = COMMITTEE_SHARE


@dataclass(frozen=True, slots=True)
class SendMsg:
    pb: PbId
    value: bytes
    proof: Union[KeyProof, ThresholdSignature]
    kind = SEND

    @property
    def view(self) -> int:
        return self.pb.view


@dataclass(frozen=True, slots=True)
class AckMsg:
    pb: PbId
    signer: int
    share: SignShare
    kind = ACK

    @property
    def view(self) -> int:
        return self.pb.view


@dataclass(frozen=True, slots=True)
class ProposeMsg:
    view: int
    proposer: int
    value: bytes
    cert: ThresholdSignature
    kind = PROPOSE


@dataclass(frozen=True, slots=True)
class SuggestMsg:
    view: int
    sender: int
    proposer: int
    value: bytes
    cert: ThresholdSignature
    kind = SUGGEST


@dataclass(frozen=True, slots=True)
class ElectShareMsg:
    view: int
    sender: int
    share: CoinShare
    kind = ELECT_SHARE


@dataclass(frozen=True, slots=True)
class ViewChangeMsg:
    view: int
    sender: int
    leader: int
    commit: Optional[Deliverable]
    lock: Optional[Deliverable]
    key: Optional[Deliverable]
    kind = VIEW_CHANGE


@dataclass(frozen=True, slots=True)
class DecideMsg:
    """Self-certifying decision: carries the leader's step-3 certificate plus
    the coin shares that let a lagging party recompute committee and leader."""

    view: int
    sender: int
    leader: int
    value: bytes
    cert: ThresholdSignature
    committee_shares: tuple[CoinShare, ...]
    elect_shares: tuple[CoinShare, ...]
    kind = DECIDE


Message = Union[
    CommitteeShareMsg, SendMsg, AckMsg, ProposeMsg, SuggestMsg,
    ElectShareMsg, ViewChangeMsg, DecideMsg,
]


# -- encoding ------------------------------------------------------------------

def _put_cert(enc: Encoder, c: ThresholdSignature) -> None:
    enc.sig_fixed(c.message_digest).sig_blob(c.sig_bytes)


def _get_cert(dec: Decoder) -> ThresholdSignature:
    return ThresholdSignature(dec.fixed(DIGEST_LEN), dec.blob(256))


def _put_coin(enc: Encoder, s: CoinShare) -> None:
    enc.u32(s.signer).sig_fixed(s.tag_digest).sig_blob(s.share_bytes)


def _get_coin(dec: Decoder) -> CoinShare:
    return CoinShare(dec.u32(), dec.fixed(DIGEST_LEN), dec.blob(256))


def _put_pb(enc: Encoder, pb: PbId) -> None:
    enc.u32(pb.instance).u32(pb.view).u32(pb.proposer).u8(pb.step)


def _get_pb(dec: Decoder) -> PbId:
    pb = PbId(dec.u32(), dec.u32(), dec.u32(), dec.u8())
    if not 1 <= pb.step <= 4:
        raise DecodeError(f"step {pb.step} out of range")
    return pb


def _put_deliverable(enc: Encoder, d: Optional[Deliverable]) -> None:
    if d is None:
        enc.u8(0)
    else:
        enc.u8(1).blob(d.value)
        _put_cert(enc, d.cert)


def _get_deliverable(dec: Decoder) -> Optional[Deliverable]:
    flag = dec.u8()
    if flag == 0:
        return None
    if flag != 1:
        raise DecodeError("bad option flag")
    return Deliverable(dec.blob(), _get_cert(dec))


_S_HEAD = struct.Struct(">BIIIBI")
_A_HEAD = struct.Struct(">BIIIBII")
_COIN_HEAD = struct.Struct(">BIII")
_U32 = struct.Struct(">I")
_KEY_HEAD = struct.Struct(">IIB")


def _cert_bytes(c: ThresholdSignature) -> bytes:
    return c.message_digest + _U32.pack(len(c.sig_bytes)) + c.sig_bytes


def encode_sized(msg: Message) -> tuple[bytes, int]:
    """Encode ``msg``; also return how many bytes are signature material."""
    k = msg.kind
    if k == SEND:
        pb = msg.pb
        head = _S_HEAD.pack(SEND, pb.instance, pb.view, pb.proposer, pb.step, len(msg.value)) + msg.value
        p = msg.proof
        if pb.step == 1:
            if p.cert is None:
                return head + _KEY_HEAD.pack(p.view, p.leader, 0), 0
            c = _cert_bytes(p.cert)
            return head + _KEY_HEAD.pack(p.view, p.leader, 1) + c, len(c)
        c = _cert_bytes(p)
        return head + c, len(c)
    if k == ACK:
        pb, s = msg.pb, msg.share
        sig = s.message_digest + _U32.pack(len(s.share_bytes)) + s.share_bytes
        return _A_HEAD.pack(ACK, pb.instance, pb.view, pb.proposer, pb.step, msg.signer, s.signer) + sig, len(sig)
    if k == COMMITTEE_SHARE or k == ELECT_SHARE:
        s = msg.share
        sig = s.tag_digest + _U32.pack(len(s.share_bytes)) + s.share_bytes
        return _COIN_HEAD.pack(k, msg.view, msg.sender, s.signer) + sig, len(sig)
    enc = Encoder(k)
    if k == PROPOSE:
        enc.u32(msg.view).u32(msg.proposer).blob(msg.value)
        _put_cert(enc, msg.cert)
    elif k == SUGGEST:
        enc.u32(msg.view).u32(msg.sender).u32(msg.proposer).blob(msg.value)
        _put_cert(enc, msg.cert)
    elif k == VIEW_CHANGE:
        enc.u32(msg.view).u32(msg.sender).u32(msg.leader)
        _put_deliverable(enc, msg.commit)
        _put_deliverable(enc, msg.lock)
        _put_deliverable(enc, msg.key)
    elif k == DECIDE:
        enc.u32(msg.view).u32(msg.sender).u32(msg.leader).blob(msg.value)
        _put_cert(enc, msg.cert)
        for group in (msg.committee_shares, msg.elect_shares):
            enc.u8(len(group))
            for s in group:
                _put_coin(enc, s)
    else:
        raise TypeError(f"not a protocol message: {msg!r}")
    return enc.bytes(), enc.sig_len


def _cert_size(c: ThresholdSignature) -> int:
    return 36 + len(c.sig_bytes)


def _opt_size(d: Optional[Deliverable]) -> tuple[int, int]:
    if d is None:
        return 1, 0
    c = _cert_size(d.cert)
    return 5 + len(d.value) + c, c


def encoded_size(msg: Message) -> tuple[int, int]:
    """``(len(encode(msg)), signature bytes)`` without building the bytes."""
    k = msg.kind
    if k == SEND:
        p = msg.proof
        if msg.pb.step == 1:
            c = 0 if p.cert is None else _cert_size(p.cert)
            return 27 + len(msg.value) + c, c
        c = _cert_size(p)
        return 18 + len(msg.value) + c, c
    if k == ACK:
        c = 36 + len(msg.share.share_bytes)
        return 22 + c, c
    if k == COMMITTEE_SHARE or k == ELECT_SHARE:
        c = 36 + len(msg.share.share_bytes)
        return 13 + c, c
    if k == PROPOSE:
        c = _cert_size(msg.cert)
        return 13 + len(msg.value) + c, c
    if k == SUGGEST:
        c = _cert_size(msg.cert)
        return 17 + len(msg.value) + c, c
    if k == VIEW_CHANGE:
        total, sig = 13, 0
        for d in (msg.commit, msg.lock, msg.key):
            a, b = _opt_size(d)
            total += a
            sig += b
        return total, sig
    if k == DECIDE:
        sig = _cert_size(msg.cert)
        total = 19 + len(msg.value) + sig
        for s in msg.committee_shares + msg.elect_shares:
            total += 40 + len(s.share_bytes)
            sig += 36 + len(s.share_bytes)
        return total, sig
    raise TypeError(f"not a protocol message: {msg!r}")


def encode(msg: Message) -> bytes:
    return encode_sized(msg)[0]


def decode(data: bytes) -> Message:
    """Parse wire bytes; raises :class:`DecodeError` on anything malformed."""
    if not data:
        raise DecodeError("empty payload")
    dec = Decoder(data)
    k = dec.u8()
    if k == SEND:
        pb = _get_pb(dec)
        value = dec.blob()
        if pb.step == 1:
            kv, kl, flag = dec.u32(), dec.u32(), dec.u8()
            if flag not in (0, 1):
                raise DecodeError("bad option flag")
            proof = KeyProof(kv, kl, _get_cert(dec) if flag else None)
        else:
            proof = _get_cert(dec)
        msg = SendMsg(pb, value, proof)
    elif k == ACK:
        pb = _get_pb(dec)
        signer = dec.u32()
        msg = AckMsg(pb, signer, SignShare(dec.u32(), dec.fixed(DIGEST_LEN), dec.blob(256)))
    elif k == COMMITTEE_SHARE:
        msg = CommitteeShareMsg(dec.u32(), dec.u32(), _get_coin(dec))
    elif k == ELECT_SHARE:
        msg = ElectShareMsg(dec.u32(), dec.u32(), _get_coin(dec))
    elif k == PROPOSE:
        msg = ProposeMsg(dec.u32(), dec.u32(), dec.blob(), _get_cert(dec))
    elif k == SUGGEST:
        msg = SuggestMsg(dec.u32(), dec.u32(), dec.u32(), dec.blob(), _get_cert(dec))
    elif k == VIEW_CHANGE:
        msg = ViewChangeMsg(
            dec.u32(), dec.u32(), dec.u32(),
            _get_deliverable(dec), _get_deliverable(dec), _get_deliverable(dec),
        )
    elif k == DECIDE:
        view, sender, leader, value = dec.u32(), dec.u32(), dec.u32(), dec.blob()
        cert = _get_cert(dec)
        groups = []
        for _ in range(2):
            groups.append(tuple(_get_coin(dec) for _ in range(dec.u8())))
        msg = DecideMsg(view, sender, leader, value, cert, groups[0], groups[1])
    else:
        raise DecodeError(f"unknown message tag {k}")
    dec.done()
    return msg


def value_digest(value: bytes) -> bytes:
    return digest(value)
