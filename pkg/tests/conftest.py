import pytest

from serfuse import synth


@pytest.fixture(scope="session")
def small_manifest():
    """160 balanced utterances over 5 sessions x 2 speakers; do not mutate."""
    return synth.synth_manifest(n_per_class=40, seed=3)


@pytest.fixture(scope="session")
def tiny_manifest():
    return synth.synth_manifest(n_per_class=10, seed=5)
