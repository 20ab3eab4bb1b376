import pytest

from evaba.crypto import CryptoParams, deal


@pytest.fixture(scope="session")
def keys4():
    return deal(CryptoParams(n=4, t=3, f=1, seed=7))


@pytest.fixture(scope="session")
def keys7():
    return deal(CryptoParams.standard(7, seed=7))


@pytest.fixture(scope="session")
def keys10():
    return deal(CryptoParams.standard(10, seed=3))


def make_cert(keys, instance, view, proposer, step, value):
    """Certificate built the honest way: ``t`` ACK shares, combined."""
    from evaba.messages import signed_digest

    d = signed_digest(instance, view, proposer, step, value)
    shares = [keys.secret(i).sign_share_digest(d) for i in range(1, keys.params.t + 1)]
    return keys.scheme().combine_digest(shares, d)


@pytest.fixture
def cert_for():
    return make_cert


# -- acceptance verdicts ------------------------------------------------------------

_VERDICTS: dict[int, str] = {}


@pytest.fixture(scope="session")
def verdict():
    """Record one PASS/FAIL line per acceptance criterion; echoed in the summary."""

    def record(criterion: int, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'}  criterion {criterion}: {detail}"
        _VERDICTS[criterion] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_VERDICTS):
            terminalreporter.write_line(_VERDICTS[k])
