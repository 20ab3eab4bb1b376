"""Deterministic dealer-based threshold signatures and threshold coin.

This is a test scheme, not a secure one: shares and combined signatures
are HMAC-SHA256 tags under keys derived from a dealer seed, and the
verifier holds every key. It has the interface of an (n, t, f) threshold
scheme, so protocol code never sees the difference.

Signatures use threshold ``t`` (``n - f`` for this protocol). The coin is
dealt as a separate key domain with threshold ``f + 1``.
"""

from __future__ import annotations

import hmac
from functools import lru_cache
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .codec import Decoder, DecodeError, Encoder, digest

MAGIC = b"EVTC"
FILE_VERSION = 1

_SIG_DOMAIN = b"\x01sig"
_COIN_DOMAIN = b"\x02coin"
_TSIG_DOMAIN = b"\x03tsig"
_TOSS_DOMAIN = b"\x04toss"


try:
    from _hashlib import hmac_digest as _hmac_digest
except ImportError:  # pragma: no cover - non-OpenSSL builds
    _hmac_digest = hmac.digest


@lru_cache(maxsize=4096)
def _tag_digest(tag: bytes) -> bytes:
    # coin tags repeat once per party and view
    return digest(tag)


def _mac(key: bytes, msg: bytes) -> bytes:
    return _hmac_digest(key, msg, "sha256")


class CryptoError(Exception):
    pass


class ParamsError(CryptoError, ValueError):
    pass


class InsufficientShares(CryptoError):
    pass


class MixedMessages(CryptoError):
    pass


class InvalidShare(CryptoError):
    def __init__(self, signer: int):
        super().__init__(f"share from party {signer} does not validate")
        self.signer = signer


@dataclass(frozen=True)
class CryptoParams:
    n: int
    t: int
    f: int
    seed: int = 0

    @classmethod
    def standard(cls, n: int, seed: int = 0) -> "CryptoParams":
        """Parameters for ``n = 3f + 1`` with signing threshold ``n - f``."""
        f = (n - 1) // 3
        return cls(n=n, t=n - f, f=f, seed=seed)

    def check(self) -> None:
        if self.f < 0 or self.n != 3 * self.f + 1:
            raise ParamsError(f"n={self.n} is not 3f+1 for f={self.f}")
        if not self.f < self.t <= self.n:
            raise ParamsError(f"threshold t={self.t} outside ({self.f}, {self.n}]")
        if not 0 <= self.seed < 1 << 64:
            raise ParamsError("seed must fit in 64 bits")

    @property
    def coin_threshold(self) -> int:
        return self.f + 1


@dataclass(frozen=True)
class SignShare:
    signer: int
    message_digest: bytes
    share_bytes: bytes


@dataclass(frozen=True)
class ThresholdSignature:
    message_digest: bytes
    sig_bytes: bytes


@dataclass(frozen=True)
class CoinShare:
    signer: int
    tag_digest: bytes
    share_bytes: bytes


@dataclass(frozen=True)
class PartySecret:
    """One party's dealt secrets: a signature share key and a coin share key."""

    party: int
    sig_key: bytes
    coin_key: bytes

    def sign_share(self, message: bytes) -> SignShare:
        d = digest(message)
        return SignShare(self.party, d, _share_tag(self.sig_key, _SIG_DOMAIN, self.party, d))

    def sign_share_digest(self, d: bytes) -> SignShare:
        return SignShare(self.party, d, _share_tag(self.sig_key, _SIG_DOMAIN, self.party, d))

    def coin_share(self, tag: bytes) -> CoinShare:
        d = _tag_digest(tag)
        return CoinShare(self.party, d, _share_tag(self.coin_key, _COIN_DOMAIN, self.party, d))


@lru_cache(maxsize=4096)
def _share_tag(key: bytes, domain: bytes, signer: int, d: bytes) -> bytes:
    # a signer and every verifier of its share compute the same tag
    return _hmac_digest(key, domain + signer.to_bytes(4, "big") + d, "sha256")


@dataclass(frozen=True)
class KeyMaterial:
    params: CryptoParams
    sig_master: bytes
    coin_master: bytes
    sig_keys: tuple[bytes, ...]
    coin_keys: tuple[bytes, ...]

    def secret(self, party: int) -> PartySecret:
        if not 1 <= party <= self.params.n:
            raise ValueError(f"no party {party} in 1..{self.params.n}")
        return PartySecret(party, self.sig_keys[party - 1], self.coin_keys[party - 1])

    def scheme(self) -> "ThresholdScheme":
        return ThresholdScheme(self)

    def to_bytes(self) -> bytes:
        p = self.params
        enc = Encoder().fixed(MAGIC).u8(FILE_VERSION)
        enc.u32(p.n).u32(p.t).u32(p.f).u64(p.seed)
        enc.blob(self.sig_master).blob(self.coin_master)
        for i in range(p.n):
            enc.u32(i + 1).blob(self.sig_keys[i]).blob(self.coin_keys[i])
        return enc.bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "KeyMaterial":
        dec = Decoder(data)
        if dec.fixed(4) != MAGIC:
            raise DecodeError("not an EVTC key file")
        version = dec.u8()
        if version != FILE_VERSION:
            raise DecodeError(f"unsupported key file version {version}")
        params = CryptoParams(n=dec.u32(), t=dec.u32(), f=dec.u32(), seed=dec.u64())
        params.check()
        sig_master, coin_master = dec.blob(), dec.blob()
        sig_keys, coin_keys = [], []
        for i in range(params.n):
            if dec.u32() != i + 1:
                raise DecodeError("share table out of order")
            sig_keys.append(dec.blob())
            coin_keys.append(dec.blob())
        dec.done()
        return cls(params, sig_master, coin_master, tuple(sig_keys), tuple(coin_keys))

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> "KeyMaterial":
        return cls.from_bytes(Path(path).read_bytes())


def deal(params: CryptoParams) -> KeyMaterial:
    """Deal key material; a pure function of ``params``."""
    params.check()
    root = digest(
        b"evaba-dealer"
        + Encoder().u32(params.n).u32(params.t).u32(params.f).u64(params.seed).bytes()
    )
    sig_keys = tuple(_mac(root, b"sig-key" + i.to_bytes(4, "big")) for i in range(1, params.n + 1))
    coin_keys = tuple(_mac(root, b"coin-key" + i.to_bytes(4, "big")) for i in range(1, params.n + 1))
    return KeyMaterial(
        params=params,
        sig_master=_mac(root, b"sig-master"),
        coin_master=_mac(root, b"coin-master"),
        sig_keys=sig_keys,
        coin_keys=coin_keys,
    )


class ThresholdScheme:
    """Public side of the scheme: validation, combining and coin tossing."""

    def __init__(self, keys: KeyMaterial):
        self.keys = keys
        self.params = keys.params
        # verification is a pure function of its inputs; parties share the memo
        self._tsig_memo: dict = {}
        self._coin_memo: dict = {}
        self._toss_memo: dict = {}

    def _signer_ok(self, signer: int) -> bool:
        return type(signer) is int and 1 <= signer <= self.params.n

    def share_validate_digest(self, share: SignShare, d: bytes) -> bool:
        signer = share.signer
        if type(signer) is not int or not 1 <= signer <= self.params.n or share.message_digest != d:
            return False
        want = _share_tag(self.keys.sig_keys[share.signer - 1], _SIG_DOMAIN, share.signer, d)
        return hmac.compare_digest(want, share.share_bytes)

    def share_validate(self, share: SignShare, message: bytes) -> bool:
        return self.share_validate_digest(share, digest(message))

    def combine_digest(self, shares: Iterable[SignShare], d: bytes) -> ThresholdSignature:
        signers = set()
        for s in shares:
            if s.message_digest != d:
                raise MixedMessages(f"share from party {s.signer} signs a different message")
            if not self.share_validate_digest(s, d):
                raise InvalidShare(s.signer)
            signers.add(s.signer)
        if len(signers) < self.params.t:
            raise InsufficientShares(f"{len(signers)} distinct signers, need {self.params.t}")
        return ThresholdSignature(d, _mac(self.keys.sig_master, _TSIG_DOMAIN + d))

    def combine(self, shares: Iterable[SignShare], message: bytes) -> ThresholdSignature:
        return self.combine_digest(shares, digest(message))

    def threshold_validate_digest(self, sig: ThresholdSignature, d: bytes) -> bool:
        if sig.message_digest != d:
            return False
        key = (d, sig.sig_bytes)
        ok = self._tsig_memo.get(key)
        if ok is None:
            ok = hmac.compare_digest(_mac(self.keys.sig_master, _TSIG_DOMAIN + d), sig.sig_bytes)
            if len(self._tsig_memo) < 1 << 18:
                self._tsig_memo[key] = ok
        return ok

    def threshold_validate(self, sig: ThresholdSignature, message: bytes) -> bool:
        return self.threshold_validate_digest(sig, digest(message))

    def coin_share_verify(self, share: CoinShare, tag: bytes) -> bool:
        return self.coin_share_verify_digest(share, _tag_digest(tag))

    def coin_share_verify_digest(self, share: CoinShare, d: bytes) -> bool:
        if not self._signer_ok(share.signer) or share.tag_digest != d:
            return False
        key = (share.signer, d, share.share_bytes)
        ok = self._coin_memo.get(key)
        if ok is None:
            want = _share_tag(self.keys.coin_keys[share.signer - 1], _COIN_DOMAIN, share.signer, d)
            ok = hmac.compare_digest(want, share.share_bytes)
            if len(self._coin_memo) < 1 << 18:
                self._coin_memo[key] = ok
        return ok

    def coin_toss(self, tag: bytes, shares: Iterable[CoinShare], range_n: int, s: int) -> tuple[int, ...]:
        """Draw ``s`` distinct values from ``1..range_n``, returned ascending.

        The draw depends only on ``tag`` and the dealer seed; the shares
        just have to prove that ``f + 1`` parties released the coin.
        """
        d = _tag_digest(tag)
        signers = set()
        for sh in shares:
            if not self.coin_share_verify_digest(sh, d):
                raise InvalidShare(sh.signer)
            signers.add(sh.signer)
        if len(signers) < self.params.coin_threshold:
            raise InsufficientShares(
                f"{len(signers)} coin shares, need {self.params.coin_threshold}"
            )
        key = (d, range_n, s)
        out = self._toss_memo.get(key)
        if out is None:
            out = self._coin_draw(d, range_n, s)
            if len(self._toss_memo) < 1 << 16:
                self._toss_memo[key] = out
        return out

    def coin_value(self, tag: bytes, range_n: int, s: int) -> tuple[int, ...]:
        """What ``coin_toss`` returns for ``tag`` once enough shares arrive.

        Only for distribution analysis: it skips the share quorum, which the
        protocol never does.
        """
        return self._coin_draw(_tag_digest(tag), range_n, s)

    def _coin_draw(self, d: bytes, range_n: int, s: int) -> tuple[int, ...]:
        return sample_distinct(_mac(self.keys.coin_master, _TOSS_DOMAIN + d), range_n, s)


def sample_distinct(seed: bytes, range_n: int, s: int) -> tuple[int, ...]:
    """Uniform ``s``-subset of ``1..range_n`` from a byte seed (partial Fisher-Yates)."""
    if not 0 <= s <= range_n:
        raise ValueError(f"cannot draw {s} distinct values from {range_n}")
    pool = list(range(1, range_n + 1))
    stream = _U64Stream(seed)
    for i in range(s):
        j = i + stream.below(range_n - i)
        pool[i], pool[j] = pool[j], pool[i]
    return tuple(sorted(pool[:s]))


class _U64Stream:
    __slots__ = ("_seed", "_ctr", "_buf")

    def __init__(self, seed: bytes):
        self._seed = seed
        self._ctr = 0
        self._buf: list[int] = []

    def next(self) -> int:
        if not self._buf:
            block = digest(self._seed + self._ctr.to_bytes(8, "big"))
            self._ctr += 1
            self._buf = [int.from_bytes(block[k:k + 8], "big") for k in (24, 16, 8, 0)]
        return self._buf.pop()

    def below(self, m: int) -> int:
        limit = (1 << 64) - (1 << 64) % m
        while True:
            x = self.next()
            if x < limit:
                return x % m
