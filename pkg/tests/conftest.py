import sys
from dataclasses import replace
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from provfda import pipeline  # noqa: E402
from provfda.ingest import LogRecord  # noqa: E402
from provfda.pipeline import EncoderConfig, PipelineConfig  # noqa: E402
from provfda.synthgen import BehaviorProfile, InjectionSpec, gen_benign, inject, split_by_time  # noqa: E402

_RESULTS_KEY = pytest.StashKey[list]()


def rec(user="u1", ts=1000, event=4624, proc="svchost.exe", base="", logon="", parent=""):
    return LogRecord(user, ts, event, proc, base, logon, parent)


@pytest.fixture(scope="session")
def small_corpus():
    """3 users x 600 logs, time split, anomalies injected into the later part."""
    benign = gen_benign(BehaviorProfile(), 3, 600, seed=5)
    train, held = split_by_time(benign, 0.75)
    mixed = inject(held, InjectionSpec(rate=0.1), seed=5)
    return train, mixed


@pytest.fixture(scope="session")
def small_config():
    return PipelineConfig(encoder=EncoderConfig(embed_dim=16, sg_epochs=1, sg_max_walks=200))


@pytest.fixture(scope="session")
def fda_fit(small_corpus, small_config):
    return pipeline.fit(small_corpus[0], small_config)


@pytest.fixture(scope="session")
def gnn_fit(small_corpus, small_config):
    cfg = replace(small_config, path="gnn", gnn=replace(small_config.gnn, hidden=(8, 4)))
    return pipeline.fit(small_corpus[0], cfg)


@pytest.fixture
def criterion(request):
    """Record one acceptance verdict: criterion(name, passed, detail)."""
    results = request.config.stash.setdefault(_RESULTS_KEY, [])

    def record(name, passed, detail=""):
        results.append((name, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_RESULTS_KEY, [])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in results:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")
