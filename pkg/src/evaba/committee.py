"""Per-view committee selection from a threshold coin."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Optional

from .crypto import CoinShare, PartySecret, ThresholdScheme
from .codec import digest
from .messages import CommitteeShareMsg, committee_tag


@dataclass(frozen=True)
class Committee:
    view: int
    members: tuple[int, ...]

    def __contains__(self, party: int) -> bool:
        return party in self.members

    def __len__(self) -> int:
        return len(self.members)


class CommitteeSelection:
    """One party's collector for one view's committee coin."""

    def __init__(self, scheme: ThresholdScheme, secret: PartySecret, instance: int, view: int, kappa: int):
        n = scheme.params.n
        if not 1 <= kappa <= n:
            raise ValueError(f"kappa={kappa} outside 1..{n}")
        self.scheme = scheme
        self.secret = secret
        self.view = view
        self.kappa = kappa
        self.tag = committee_tag(instance, view)
        self._tag_digest = digest(self.tag)
        self.shares: dict[int, CoinShare] = {}
        self.committee: Optional[Committee] = None
        self.dropped: Counter[str] = Counter()

    def start(self) -> CommitteeShareMsg:
        return CommitteeShareMsg(self.view, self.secret.party, self.secret.coin_share(self.tag))

    def on_share(self, msg: CommitteeShareMsg) -> Optional[Committee]:
        """Record a share; returns the committee the moment it becomes known."""
        if msg.sender in self.shares:
            self.dropped["Duplicate"] += 1
            return None
        if msg.share.signer != msg.sender or not self.scheme.coin_share_verify_digest(msg.share, self._tag_digest):
            self.dropped["InvalidShare"] += 1
            return None
        self.shares[msg.sender] = msg.share
        if self.committee is None and len(self.shares) >= self.scheme.params.coin_threshold:
            members = self.scheme.coin_toss(self.tag, self.shares.values(), self.scheme.params.n, self.kappa)
            self.committee = Committee(self.view, members)
            return self.committee
        return None

    def proof_shares(self) -> tuple[CoinShare, ...]:
        """The ``f + 1`` lowest-id shares, enough for anyone to recompute the committee."""
        k = self.scheme.params.coin_threshold
        return tuple(self.shares[s] for s in sorted(self.shares)[:k])


def committee_probability(n: int, f: int, kappa: int) -> Fraction:
    """Exact chance that a uniform ``kappa``-subset of ``n`` parties is all Byzantine."""
    if not 0 <= kappa <= n:
        raise ValueError(f"kappa={kappa} outside 0..{n}")
    return Fraction(comb(f, kappa), comb(n, kappa))
