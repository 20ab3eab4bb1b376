"""Each white-box check must fire on a trace doctored to break its property."""

import copy
import dataclasses

import pytest

from evaba import checks
from evaba.crypto import CryptoParams
from evaba.sim import AdversaryConfig, run


@pytest.fixture(scope="module")
def base():
    tr = run(CryptoParams.standard(4, seed=1), AdversaryConfig(scheduler="fifo", seed=1))
    assert tr.status == "decided"
    assert checks.violations(tr) == []
    return tr


@pytest.fixture
def tr(base):
    return copy.deepcopy(base)


def _edit(tr, party, **changes):
    tr.snapshots[party] = dataclasses.replace(tr.snapshots[party], **changes)


def _outsider(tr, view):
    return next(i for i in range(1, tr.n + 1) if i not in tr.committees[view])


def test_agreement(tr):
    _edit(tr, 2, decided=b"value-other")
    assert any(v.startswith("agreement") for v in checks.violations(tr))


def test_external_validity_invalid_value(tr):
    for i in tr.honest:
        _edit(tr, i, decided=b"junk")
    assert any("invalid value" in v for v in checks.external_validity(tr))


def test_external_validity_unpromoted_value(tr):
    for i in tr.honest:
        _edit(tr, i, decided=b"value-9")
    assert any("no committee member promoted" in v for v in checks.external_validity(tr))


def test_pb_selected(tr):
    tr.observed_certs.add((1, _outsider(tr, 1), 1, b"value-x"))
    assert checks.pb_selected(tr)


def test_pb_provability(tr):
    (v, p, s, value) = next(iter(sorted(tr.observed_certs)))
    tr.observed_certs.add((v, p, s, value + b"!"))
    assert checks.pb_provability(tr)


def test_lock_coverage(tr):
    member = tr.committees[1][0]
    tr.observed_certs.add((1, member, 3, b"value-unheld"))
    assert checks.lock_coverage(tr)


def test_key_coverage(tr):
    member = tr.committees[1][0]
    tr.observed_certs.add((1, member, 2, b"value-unheld"))
    assert checks.key_coverage(tr)


def test_value_consistency(tr):
    snap = tr.snapshots[1]
    key, (k, lk, c) = next((key, vals) for key, vals in snap.promotions.items() if vals[0] is not None)
    promotions = dict(snap.promotions)
    promotions[key] = (k + b"!", lk, c)
    _edit(tr, 1, promotions=promotions)
    assert checks.value_consistency(tr)


def test_committee_agreement(tr):
    _edit(tr, 3, committees={1: (_outsider(tr, 1),)})
    assert checks.committee_agreement(tr)


def test_leader_consistency_split(tr):
    leaders = dict(tr.snapshots[1].leaders)
    others = [m for m in tr.committees[1] if m != leaders[1]]
    leaders[1] = others[0]
    _edit(tr, 1, leaders=leaders)
    assert any("elected" in v for v in checks.leader_consistency(tr))


def test_leader_off_committee(tr):
    out = _outsider(tr, 1)
    for i in tr.honest:
        _edit(tr, i, leaders={**tr.snapshots[i].leaders, 1: out})
    assert any("not on the committee" in v for v in checks.leader_consistency(tr))


def test_safety_across_views(tr):
    w = tr.views_to_decide
    tr.observed_certs.add((w + 1, 1, 1, b"value-late"))
    assert checks.safety_across_views(tr)


def test_eventual_delivery(tr):
    tr.pending_honest = 3
    assert checks.eventual_delivery(tr)


def test_pb_integrity(tr):
    signer = tr.honest[0]
    for _ in range(5):
        tr.events.append((999, "send", signer, 2, "ack", 1, None, None))
    assert checks.pb_integrity(tr)
