import itertools
from fractions import Fraction

import pytest

from evaba.committee import Committee, CommitteeSelection, committee_probability
from evaba.crypto import CoinShare
from evaba.engine import elect_and_map, map_to_committee
from evaba.messages import CommitteeShareMsg, committee_tag


def enumerate_probability(n, f, kappa):
    subsets = list(itertools.combinations(range(1, n + 1), kappa))
    bad = sum(1 for s in subsets if all(m <= f for m in s))
    return Fraction(bad, len(subsets))


@pytest.mark.parametrize("n,f,kappa,want", [
    (4, 1, 2, Fraction(0)),
    (10, 3, 2, Fraction(3, 45)),
    (10, 3, 4, Fraction(0)),
    (7, 2, 1, Fraction(2, 7)),
])
def test_probability_examples(n, f, kappa, want):
    assert committee_probability(n, f, kappa) == want
    assert enumerate_probability(n, f, kappa) == want


def test_probability_matches_enumeration_up_to_12():
    for n in (4, 7, 10):
        f = (n - 1) // 3
        for kappa in range(1, n + 1):
            assert committee_probability(n, f, kappa) == enumerate_probability(n, f, kappa)
    for kappa in range(1, 13):
        assert committee_probability(12, 3, kappa) == enumerate_probability(12, 3, kappa)


def test_probability_range_check():
    with pytest.raises(ValueError):
        committee_probability(4, 1, 5)


def selection(keys, party, view=1, kappa=2):
    return CommitteeSelection(keys.scheme(), keys.secret(party), 0, view, kappa)


def test_start_selection(keys4):
    sel = selection(keys4, 3)
    msg = sel.start()
    assert msg.sender == 3 and msg.view == 1
    assert keys4.scheme().coin_share_verify(msg.share, committee_tag(0, 1))
    assert selection(keys4, 3).start() == msg
    assert selection(keys4, 3, view=2).start().share.tag_digest != msg.share.tag_digest


def test_committee_after_threshold(keys4):
    sel = selection(keys4, 1)
    shares = {i: selection(keys4, i).start() for i in range(1, 5)}
    assert sel.on_share(shares[1]) is None
    assert sel.on_share(shares[1]) is None
    assert sel.dropped["Duplicate"] == 1
    committee = sel.on_share(shares[4])
    assert isinstance(committee, Committee)
    assert len(committee) == 2 and list(committee.members) == sorted(committee.members)
    assert sel.on_share(shares[2]) is None
    assert len(sel.proof_shares()) == 2


def test_committee_independent_of_share_subset(keys4):
    shares = {i: selection(keys4, i).start() for i in range(1, 5)}
    a, b = selection(keys4, 1), selection(keys4, 2)
    a.on_share(shares[1])
    ca = a.on_share(shares[2])
    b.on_share(shares[3])
    cb = b.on_share(shares[4])
    assert ca == cb


def test_invalid_share_is_ignored(keys4):
    sel = selection(keys4, 1)
    good = selection(keys4, 2).start()
    forged = CommitteeShareMsg(1, 3, CoinShare(3, good.share.tag_digest, b"\x00" * 32))
    assert sel.on_share(forged) is None
    assert sel.dropped["InvalidShare"] == 1
    stolen = CommitteeShareMsg(1, 3, good.share)
    assert sel.on_share(stolen) is None
    assert sel.dropped["InvalidShare"] == 2


@pytest.mark.parametrize("raw,members,want", [
    (5, (5, 9), 5),
    (6, (2, 8), 8),
    (5, (2, 8), 2),
    (1, (3, 4), 3),
    (10, (1, 2, 7), 7),
])
def test_map_to_committee(raw, members, want):
    assert map_to_committee(raw, members) == want


def test_map_to_empty_committee():
    with pytest.raises(ValueError):
        map_to_committee(3, ())


def test_elect_lands_on_committee(keys10):
    scheme = keys10.scheme()
    from evaba.messages import elect_tag

    for view in range(1, 40):
        tag = elect_tag(0, view)
        shares = [keys10.secret(i).coin_share(tag) for i in range(1, 5)]
        members = (2, 5, 9)
        assert elect_and_map(scheme, 0, view, shares, members) in members
