import numpy as np
import pytest

from meps import ClipTable


def two_layer(n1=4, n2=4):
    """Layer 1 clips c1..c{n1} (ids 0..), layer 2 clips d1..d{n2}."""
    clips = ClipTable()
    for k in range(n1):
        clips.add(f"c{k + 1}", layer=1)
    for k in range(n2):
        clips.add(f"d{k + 1}", layer=2)
    return clips


def flat(n):
    clips = ClipTable()
    for k in range(n):
        clips.add(f"v{k}")
    return clips


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def example_clips():
    return two_layer()
