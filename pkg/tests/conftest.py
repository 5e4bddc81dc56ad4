import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mockserver import MockServer, dominant_hz, source_of  # noqa: E402

from codeswitch_eval.clients import EndpointConfig  # noqa: E402
from codeswitch_eval.corpus import load_corpus  # noqa: E402
from codeswitch_eval.preprocess.text import normalize_text  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"
SYNTHETIC_CORPUS = FIXTURES / "synthetic_corpus.jsonl"


def tone_index(hz: float) -> int:
    # inverse of make_fixtures.tone_hz
    return round((hz - 200.0) / 150.0)


def fixture_asr(corpus):
    """ASR mock behaviour: recover the segment from its tone, return its source."""
    segs = list(corpus)

    def fn(samples, rate):
        return segs[tone_index(dominant_hz(samples, rate))].source_cs

    return fn


def fixture_mt(corpus, target="en", corrupt_every=3):
    """MT mock behaviour: look the source up and return the reference, dropping
    the last word of every ``corrupt_every``-th segment so scores are not trivial."""
    table = {}
    for i, seg in enumerate(corpus):
        ref = seg.reference(target)
        if corrupt_every and i % corrupt_every == 0:
            ref = " ".join(ref.split()[:-1]) or ref
        table[normalize_text(seg.source_cs)] = ref

    def fn(messages):
        return table.get(source_of(messages), "unknown")

    return fn


@pytest.fixture
def synthetic_corpus():
    return load_corpus(SYNTHETIC_CORPUS)


@pytest.fixture
def mock_server():
    with MockServer() as server:
        yield server


def endpoint(server, **kw) -> EndpointConfig:
    kw.setdefault("model_id", "mock")
    kw.setdefault("backoff_s", 0.0)
    kw.setdefault("timeout_s", 10.0)
    return EndpointConfig(base_url=server.url, **kw)
