import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given
from hypothesis import strategies as st

from serfuse.util import fnv1a_64, pct, sha256_file, spearman

# Published FNV-1a 64-bit reference vectors.
FNV_VECTORS = [
    (b"", 0xCBF29CE484222325),
    (b"a", 0xAF63DC4C8601EC8C),
    (b"foobar", 0x85944171F73967E8),
]


@pytest.mark.parametrize("data,expected", FNV_VECTORS)
def test_fnv1a_reference_vectors(data, expected):
    assert fnv1a_64(data) == expected


def test_fnv1a_str_matches_utf8_bytes():
    assert fnv1a_64("émotion") == fnv1a_64("émotion".encode("utf-8"))


@given(st.binary(max_size=64))
def test_fnv1a_stays_in_64_bits(data):
    assert 0 <= fnv1a_64(data) < 2**64


def test_pct_rounds_half_away_from_zero():
    # 0.7355 * 100 = 73.55 must become 73.6, not banker's 73.5 or float-drift 73.5.
    assert pct(0.7355) == "73.6"
    assert pct(0.599) == "59.9"
    assert pct(0.25) == "25.0"
    assert pct(0.0) == "0.0"
    assert pct(1.0) == "100.0"
    assert pct(0.99995, decimals=2) == "100.00"


def test_pct_decimals():
    assert pct(0.123456, decimals=3) == "12.346"


def test_spearman_matches_scipy_on_random_data():
    rng = np.random.default_rng(4)
    for _ in range(50):
        n = int(rng.integers(3, 40))
        x = rng.normal(size=n)
        y = rng.normal(size=n)
        expected = scipy.stats.spearmanr(x, y).statistic
        assert spearman(x, y) == pytest.approx(expected, abs=1e-12)


def test_spearman_with_ties_matches_scipy():
    rng = np.random.default_rng(5)
    for _ in range(50):
        n = int(rng.integers(3, 30))
        x = rng.integers(0, 4, size=n).astype(float)
        y = rng.integers(0, 4, size=n).astype(float)
        expected = scipy.stats.spearmanr(x, y).statistic
        got = spearman(x, y)
        if math.isnan(expected):
            assert math.isnan(got)
        else:
            assert got == pytest.approx(expected, abs=1e-12)


def test_spearman_degenerate_inputs_are_nan():
    assert math.isnan(spearman([1.0], [2.0]))
    assert math.isnan(spearman([3.0, 3.0, 3.0], [1.0, 2.0, 3.0]))


def test_spearman_perfect_monotone():
    assert spearman([1, 2, 3, 4], [10, 20, 30, 40]) == pytest.approx(1.0)
    assert spearman([1, 2, 3, 4], [5, 4, 3, 2]) == pytest.approx(-1.0)


def test_spearman_shape_mismatch():
    with pytest.raises(ValueError):
        spearman([1.0, 2.0], [1.0])


def test_sha256_file(tmp_path):
    path = tmp_path / "x.bin"
    path.write_bytes(b"abc")
    # sha256("abc") is a fixed published value.
    assert sha256_file(path) == (
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    )
