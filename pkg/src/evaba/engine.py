"""Per-party eVABA state machine.

A :class:`Party` is a single-threaded event processor. The simulator feeds
it ``(sender, message)`` pairs through :meth:`Party.handle` and gets back
outbound ``(recipient, message)`` pairs, where recipient ``ALL`` means a
multicast to every party including the sender itself.

View loop: committee coin -> committee members promote -> PROPOSE ->
SUGGEST -> election coin mapped onto the committee -> VIEW-CHANGE ->
decide, or advance with the adopted key.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .codec import digest
from .committee import Committee, CommitteeSelection
from .crypto import CoinShare, CryptoError, KeyMaterial, PartySecret, ThresholdScheme, ThresholdSignature
from .messages import (
    ACK, COMMITTEE_SHARE, DECIDE, ELECT_SHARE, PROPOSE, SEND, SUGGEST, VIEW_CHANGE,
    DecideMsg, Deliverable, ElectShareMsg, KeyProof, Message, ProposeMsg, SendMsg,
    SuggestMsg, ViewChangeMsg, committee_tag, elect_tag,
)
from .pb import (
    INVALID_PROOF, INVALID_SHARE, NOT_SELECTED, WRONG_SENDER, PbReceiver, cert_valid, ex_pb_val,
)
from .promotion import Promotion, PromotionResult, PromotionTable

ALL = 0

STALE = "Stale"
HALTED = "Halted"
LEADER_MISMATCH = "LeaderMismatch"
DUPLICATE = "Duplicate"

Outbound = list[tuple[int, Message]]


def valid_value(value: bytes) -> bool:
    """Default application predicate used by the simulator and tests."""
    return value.startswith(b"value-") and len(value) <= 1024


def map_to_committee(raw: int, members) -> int:
    """Nearest committee member by absolute id difference; ties go to the smaller id."""
    if not members:
        raise ValueError("empty committee")
    return min(members, key=lambda m: (abs(raw - m), m))


def elect_and_map(scheme: ThresholdScheme, instance: int, view: int, shares, committee) -> int:
    raw = scheme.coin_toss(elect_tag(instance, view), shares, scheme.params.n, 1)[0]
    if raw in committee:
        return raw
    return map_to_committee(raw, committee)


@dataclass
class ViewState:
    view: int
    selection: CommitteeSelection
    receiver: PbReceiver
    committee: Optional[Committee] = None
    # the committee's ids as a set, for the membership checks on hot paths
    members: frozenset = frozenset()
    promotion: Optional[Promotion] = None
    proposes: dict = field(default_factory=dict)
    suggested: bool = False
    suggests: dict = field(default_factory=dict)
    commit_proofs: set = field(default_factory=set)
    elect_shares: dict = field(default_factory=dict)
    elect_sent: bool = False
    leader: Optional[int] = None
    vcs: dict = field(default_factory=dict)
    pending_committee: list = field(default_factory=list)
    pending_leader: list = field(default_factory=list)
    elect_digest: bytes = b""


@dataclass
class PartySnapshot:
    me: int
    view: int
    lock: int
    prepare_view: int
    prepare_value: bytes
    decided: Optional[bytes]
    decided_view: Optional[int]
    halted: bool
    committees: dict[int, tuple[int, ...]]
    leaders: dict[int, int]
    promotions: dict[tuple[int, int], tuple[Optional[bytes], Optional[bytes], Optional[bytes]]]
    acked: dict[int, int]


class Party:
    def __init__(
        self,
        me: int,
        keys: KeyMaterial,
        initial_value: bytes,
        kappa: Optional[int] = None,
        validity: Callable[[bytes], bool] = valid_value,
        instance: int = 0,
        max_views: int = 20,
        scheme: Optional[ThresholdScheme] = None,
    ):
        p = keys.params
        self.me = me
        self.n, self.f = p.n, p.f
        self.quorum = p.n - p.f
        self.scheme = scheme or keys.scheme()
        self.secret: PartySecret = keys.secret(me)
        self.kappa = p.f + 1 if kappa is None else kappa
        if not 1 <= self.kappa <= p.n:
            raise ValueError(f"kappa={self.kappa} outside 1..{p.n}")
        self.validity = validity
        self.instance = instance
        self.max_views = max_views

        self.view = 0
        self.lock = 0
        self.prepare = KeyProof(0, 0, None)
        self.prepare_value = initial_value
        self.decided: Optional[bytes] = None
        self.decided_view: Optional[int] = None
        self.halted = False
        self.leaders: dict[int, int] = {}
        self.promotions = PromotionTable()
        self.views: dict[int, ViewState] = {}
        self._future: dict[int, list] = {}
        self.events: list[tuple] = []
        # state-transition events are only for traces; certs and drops always
        self.verbose = True

    # -- driver surface ------------------------------------------------------

    def start(self) -> Outbound:
        out: Outbound = []
        self._start_view(1, out)
        return out

    def handle(self, frm: int, msg: Message) -> Outbound:
        out: Outbound = []
        self._dispatch(frm, msg, out)
        return out

    def snapshot(self) -> PartySnapshot:
        return PartySnapshot(
            me=self.me,
            view=self.view,
            lock=self.lock,
            prepare_view=self.prepare.view,
            prepare_value=self.prepare_value,
            decided=self.decided,
            decided_view=self.decided_view,
            halted=self.halted,
            committees={v: vs.committee.members for v, vs in self.views.items() if vs.committee},
            leaders=dict(self.leaders),
            promotions={
                k: (
                    st.prepare.value if st.prepare else None,
                    st.lock.value if st.lock else None,
                    st.commit.value if st.commit else None,
                )
                for k, st in self.promotions.items()
            },
            acked={v: len(vs.receiver.acked) for v, vs in self.views.items()},
        )

    def committee(self, view: int) -> Optional[Committee]:
        vs = self.views.get(view)
        return vs.committee if vs else None

    # -- plumbing ----------------------------------------------------------------

    def _drop(self, msg: Message, frm: int, reason: str) -> None:
        self.events.append(("drop", msg.view, msg.kind, frm, reason, msg))

    def _dispatch(self, frm: int, msg: Message, out: Outbound) -> None:
        kind = msg.kind
        if kind == DECIDE:
            if self.decided is None:
                self._on_decide(frm, msg, out)
            return
        v = msg.view
        if kind == SEND:
            # membership first, whatever the view: a non-member's SEND is
            # NotSelected even when stale or after the decision
            vs = self.views.get(v)
            if vs is not None and vs.committee is not None and msg.pb.proposer not in vs.members:
                self._drop(msg, frm, NOT_SELECTED)
                return
        if self.decided is not None or self.halted:
            # after deciding, only keep answering SENDs of the decided view
            if kind == SEND and v == self.view and self.decided is not None:
                vs = self.views[v]
                if vs.committee is not None:
                    self._on_send(vs, frm, msg, out)
                    return
            self._drop(msg, frm, HALTED)
            return
        if v < self.view:
            self._drop(msg, frm, STALE)
            return
        if v > self.view:
            if v <= self.max_views:
                self._future.setdefault(v, []).append((frm, msg))
            else:
                self._drop(msg, frm, HALTED)
            return
        vs = self.views[v]
        if kind == COMMITTEE_SHARE:
            self._on_committee_share(vs, frm, msg, out)
        elif kind == ACK:
            self._on_ack(vs, frm, msg, out)
        elif vs.committee is None:
            vs.pending_committee.append((frm, msg))
        elif kind == SEND:
            self._on_send(vs, frm, msg, out)
        elif kind == PROPOSE:
            self._on_propose(vs, frm, msg, out)
        elif kind == SUGGEST:
            self._on_suggest(vs, frm, msg, out)
        elif kind == ELECT_SHARE:
            self._on_elect_share(vs, frm, msg, out)
        elif kind == VIEW_CHANGE:
            if vs.leader is None:
                vs.pending_leader.append((frm, msg))
            else:
                self._on_viewchange(vs, frm, msg, out)

    # -- view start and committee ----------------------------------------------

    def _start_view(self, view: int, out: Outbound) -> None:
        if view > self.max_views:
            self.halted = True
            if self.verbose:
                self.events.append(("exhausted", view - 1, self.me))
            return
        self.view = view
        vs = ViewState(
            view=view,
            selection=CommitteeSelection(self.scheme, self.secret, self.instance, view, self.kappa),
            receiver=PbReceiver(self.scheme, self.secret),
        )
        vs.elect_digest = digest(elect_tag(self.instance, view))
        self.views[view] = vs
        if self.verbose:
            self.events.append(("view", view, self.me))
        out.append((ALL, vs.selection.start()))
        for frm, msg in self._future.pop(view, ()):
            if self.view != view or self.decided is not None:
                break
            self._dispatch(frm, msg, out)

    def _on_committee_share(self, vs: ViewState, frm: int, msg, out: Outbound) -> None:
        if msg.sender != frm:
            self._drop(msg, frm, WRONG_SENDER)
            return
        committee = vs.selection.on_share(msg)
        if committee is None:
            return
        vs.committee = committee
        vs.members = frozenset(committee.members)
        if self.verbose:
            self.events.append(("committee", vs.view, committee.members))
        if self.me in committee:
            vs.promotion = Promotion(
                self.scheme, self.instance, vs.view, self.me, self.prepare_value, self.prepare,
            )
            if self.verbose:
                self.events.append(("promote", vs.view, self.me, self.prepare_value))
            out.append((ALL, vs.promotion.start()))
        pending, vs.pending_committee = vs.pending_committee, []
        for frm2, m2 in pending:
            if self.view != vs.view or self.decided is not None:
                break
            self._dispatch(frm2, m2, out)

    # -- promotion ---------------------------------------------------------------

    def _validate_send(self, msg: SendMsg) -> bool:
        return ex_pb_val(msg, self.scheme, self.validity, self.lock, self.leaders)

    def _on_send(self, vs: ViewState, frm: int, msg: SendMsg, out: Outbound) -> None:
        ack, reason = vs.receiver.on_send(msg, frm, vs.members, self._validate_send)
        if reason is not None:
            self._drop(msg, frm, reason)
            return
        pb = msg.pb
        if pb.step > 1:
            slot = self.promotions.on_delivery(pb, msg.value, msg.proof)
            if slot is not None:
                if self.verbose:
                    self.events.append(("deliver", pb.view, pb.proposer, slot, msg.value))
        if self.verbose:
            self.events.append(("ack", pb.view, pb.proposer, pb.step))
        out.append((frm, ack))

    def _on_ack(self, vs: ViewState, frm: int, msg, out: Outbound) -> None:
        promo = vs.promotion
        if promo is None or msg.pb.proposer != self.me:
            return
        r = promo.on_ack(msg, frm)
        if r is None:
            return
        final = isinstance(r, PromotionResult)
        step = 4 if final else r.pb.step - 1
        self.events.append(("cert", vs.view, self.me, step, promo.value))
        if final:
            out.append((ALL, ProposeMsg(vs.view, self.me, r.value, r.cert)))
        else:
            out.append((ALL, r))

    # -- propose / suggest ---------------------------------------------------------

    def _commit_proof_ok(self, vs: ViewState, proposer: int, value: bytes, cert) -> bool:
        key = (proposer, value, cert)
        if key in vs.commit_proofs:
            return True
        if proposer in vs.members and cert_valid(
            self.scheme, self.instance, vs.view, proposer, 4, value, cert
        ):
            vs.commit_proofs.add(key)
            return True
        return False

    def _on_propose(self, vs: ViewState, frm: int, msg: ProposeMsg, out: Outbound) -> None:
        if msg.proposer != frm:
            self._drop(msg, frm, WRONG_SENDER)
            return
        if msg.proposer not in vs.members:
            self._drop(msg, frm, NOT_SELECTED)
            return
        if not self._commit_proof_ok(vs, msg.proposer, msg.value, msg.cert):
            self._drop(msg, frm, INVALID_PROOF)
            return
        vs.proposes.setdefault(msg.proposer, (msg.value, msg.cert))
        if not vs.suggested:
            vs.suggested = True
            out.append((ALL, SuggestMsg(vs.view, self.me, msg.proposer, msg.value, msg.cert)))

    def _on_suggest(self, vs: ViewState, frm: int, msg: SuggestMsg, out: Outbound) -> None:
        if msg.sender != frm:
            self._drop(msg, frm, WRONG_SENDER)
            return
        if frm in vs.suggests:
            self._drop(msg, frm, DUPLICATE)
            return
        if not self._commit_proof_ok(vs, msg.proposer, msg.value, msg.cert):
            self._drop(msg, frm, INVALID_PROOF)
            return
        vs.suggests[frm] = msg.proposer
        if len(vs.suggests) >= self.quorum and not vs.elect_sent:
            vs.elect_sent = True
            self._abandon(vs)
            share = self.secret.coin_share(elect_tag(self.instance, vs.view))
            out.append((ALL, ElectShareMsg(vs.view, self.me, share)))

    def _abandon(self, vs: ViewState) -> None:
        if vs.receiver.abandon():
            if self.verbose:
                self.events.append(("abandon", vs.view, self.me))
        if vs.promotion is not None:
            vs.promotion.abandon()

    # -- election and view change -----------------------------------------------

    def _on_elect_share(self, vs: ViewState, frm: int, msg: ElectShareMsg, out: Outbound) -> None:
        if msg.sender != frm or msg.share.signer != frm:
            self._drop(msg, frm, WRONG_SENDER)
            return
        if frm in vs.elect_shares:
            self._drop(msg, frm, DUPLICATE)
            return
        if not self.scheme.coin_share_verify_digest(msg.share, vs.elect_digest):
            self._drop(msg, frm, INVALID_SHARE)
            return
        vs.elect_shares[frm] = msg.share
        if vs.leader is None and len(vs.elect_shares) >= self.f + 1:
            leader = elect_and_map(
                self.scheme, self.instance, vs.view, vs.elect_shares.values(), vs.committee.members
            )
            self._on_leader(vs, leader, out)

    def _on_leader(self, vs: ViewState, leader: int, out: Outbound) -> None:
        vs.leader = leader
        self.leaders[vs.view] = leader
        if self.verbose:
            self.events.append(("leader", vs.view, leader))
        self._abandon(vs)
        st = self.promotions.state(vs.view, leader)
        out.append((ALL, ViewChangeMsg(vs.view, self.me, leader, st.commit, st.lock, st.prepare)))
        pending, vs.pending_leader = vs.pending_leader, []
        for frm, m in pending:
            if self.view != vs.view or self.decided is not None:
                break
            self._on_viewchange(vs, frm, m, out)

    def _vc_valid(self, view: int, leader: int, msg: ViewChangeMsg) -> bool:
        for step, d in ((3, msg.commit), (2, msg.lock), (1, msg.key)):
            if d is not None and not cert_valid(self.scheme, self.instance, view, leader, step, d.value, d.cert):
                return False
        return True

    def _on_viewchange(self, vs: ViewState, frm: int, msg: ViewChangeMsg, out: Outbound) -> None:
        if msg.sender != frm:
            self._drop(msg, frm, WRONG_SENDER)
            return
        if msg.leader != vs.leader:
            self._drop(msg, frm, LEADER_MISMATCH)
            return
        if frm in vs.vcs:
            self._drop(msg, frm, DUPLICATE)
            return
        if not self._vc_valid(vs.view, vs.leader, msg):
            self._drop(msg, frm, INVALID_PROOF)
            return
        vs.vcs[frm] = msg
        if msg.key is not None and vs.view > self.prepare.view:
            self.prepare = KeyProof(vs.view, vs.leader, msg.key.cert)
            self.prepare_value = msg.key.value
            if self.verbose:
                self.events.append(("prepare", vs.view, msg.key.value))
        if msg.lock is not None and vs.view > self.lock:
            self.lock = vs.view
            if self.verbose:
                self.events.append(("lock", vs.view, msg.lock.value))
        if msg.commit is not None:
            self._decide(
                vs.view, vs.leader, msg.commit.value, msg.commit.cert,
                vs.selection.proof_shares(), self._elect_proof(vs), out,
            )
            return
        if len(vs.vcs) >= self.quorum:
            if self.verbose:
                self.events.append(("advance", vs.view, self.me))
            self._start_view(vs.view + 1, out)

    def _elect_proof(self, vs: ViewState) -> tuple[CoinShare, ...]:
        return tuple(vs.elect_shares[s] for s in sorted(vs.elect_shares)[: self.f + 1])

    # -- decision --------------------------------------------------------------------

    def _decide(self, view: int, leader: int, value: bytes, cert: ThresholdSignature,
                committee_shares, elect_shares, out: Outbound) -> None:
        if self.decided is not None:
            return
        self.decided = value
        self.decided_view = view
        if self.verbose:
            self.events.append(("decide", view, value))
        out.append((ALL, DecideMsg(view, self.me, leader, value, cert,
                                   tuple(committee_shares), tuple(elect_shares))))

    def decide_proof_valid(self, msg: DecideMsg) -> bool:
        """Check a DECIDE without any local state for its view."""
        try:
            members = self.scheme.coin_toss(
                committee_tag(self.instance, msg.view), msg.committee_shares, self.n, self.kappa,
            )
            leader = elect_and_map(self.scheme, self.instance, msg.view, msg.elect_shares, members)
        except (CryptoError, ValueError):
            return False
        return (
            leader == msg.leader
            and self.validity(msg.value)
            and cert_valid(self.scheme, self.instance, msg.view, leader, 3, msg.value, msg.cert)
        )

    def _on_decide(self, frm: int, msg: DecideMsg, out: Outbound) -> None:
        if self.decided is not None:
            return
        if msg.sender != frm:
            self._drop(msg, frm, WRONG_SENDER)
            return
        if not self.decide_proof_valid(msg):
            self._drop(msg, frm, INVALID_PROOF)
            return
        self._decide(msg.view, msg.leader, msg.value, msg.cert,
                     msg.committee_shares, msg.elect_shares, out)
