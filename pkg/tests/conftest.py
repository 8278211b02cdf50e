import numpy as np
import pytest

from gwnorm import graphs


def seeded_correlation(seed, p, min_eig=0.2):
    return graphs.random_correlation(np.random.default_rng(seed), p, min_eig)


def g5_reference_D():
    """Correlation from 10 normal draws per row, rejected until min eigenvalue >= 0.2."""
    rng = np.random.default_rng(11)
    while True:
        X = rng.normal(size=(5, 10))
        S = X @ X.T
        s = np.sqrt(np.diag(S))
        D = S / np.outer(s, s)
        if np.linalg.eigvalsh(D).min() >= 0.2:
            return D


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """record(k, ok, detail): one sub-result of acceptance criterion k."""
    store = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(k, ok, detail=""):
        store.setdefault(k, []).append((bool(ok), detail))
        print(f"CRITERION {k} [{'PASS' if ok else 'FAIL'}] {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_ACCEPTANCE, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(store):
        subs = store[k]
        ok = all(s for s, _ in subs)
        failed = [d for s, d in subs if not s]
        detail = f"{len(subs) - len(failed)}/{len(subs)} checks passed"
        if failed:
            detail += "; failing: " + " | ".join(failed)
        terminalreporter.write_line(f"CRITERION {k}: {'PASS' if ok else 'FAIL'} ({detail})")
