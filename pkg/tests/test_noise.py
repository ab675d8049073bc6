import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eispde.noise import SEED_ENV, NoiseStream, resolve_seed, steps_per


def test_increment_statistics():
    s = NoiseStream(11, 0.25, 3)
    dw = s.ensemble_increments(0, 200_000, 3, 0, 0.25)
    assert np.allclose(dw.mean(axis=0), 0.0, atol=5 * 0.5 / np.sqrt(2e5))
    np.testing.assert_allclose(dw.var(axis=0), 0.25, rtol=0.02)
    c = np.corrcoef(dw.T)
    assert np.all(np.abs(c[np.triu_indices(3, 1)]) < 0.01)


def test_cosine_and_sine_outputs_are_uncorrelated():
    z = NoiseStream(5, 1.0, 1).ensemble_increments(0, 400_000, 1, 0, 1.0)[:, 0]
    assert abs(np.mean(z[0::2] * z[1::2])) < 0.01
    assert abs(np.mean(z ** 4) - 3.0) < 0.05


def test_disjoint_intervals_are_independent():
    s = NoiseStream(3, 0.5, 1)
    a = s.ensemble_increments(0, 100_000, 1, 0, 0.5)[:, 0]
    b = s.ensemble_increments(0, 100_000, 1, 1, 0.5)[:, 0]
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.015


def test_coarse_increment_is_sum_of_fine():
    s = NoiseStream(7, 2.0 ** -6, 4)
    fine = sum(s.ensemble_increments(10, 5, 4, j, 2.0 ** -6) for j in range(8, 12))
    coarse = s.ensemble_increments(10, 5, 4, 2, 2.0 ** -4)
    np.testing.assert_allclose(coarse, fine, rtol=1e-13, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 50), st.integers(1, 20), st.integers(1, 6))
def test_prefix_and_block_stability(p0, count, n):
    s = NoiseStream(123, 0.1, 8)
    big = s.ensemble_increments(0, 80, 8, 3, 0.1)
    part = s.ensemble_increments(p0, count, n, 3, 0.1)
    np.testing.assert_array_equal(part, big[p0:p0 + count, :n])


def test_scalar_and_vector_queries_agree():
    s = NoiseStream(9, 0.125, 5, path_id=17)
    block = s.ensemble_increments(15, 4, 5, 6, 0.25)
    v = s.coupled_vector_increment(5, 6, 0.25)
    np.testing.assert_array_equal(v, block[2])
    assert s.increment(3, 6, 0.25) == pytest.approx(block[2, 2], rel=1e-15)
    assert s.for_path(15).coupled_vector_increment(5, 6, 0.25)[0] == block[0, 0]


def test_seeds_differ():
    a = NoiseStream(1, 0.1, 2).ensemble_increments(0, 10, 2, 0, 0.1)
    b = NoiseStream(2, 0.1, 2).ensemble_increments(0, 10, 2, 0, 0.1)
    assert not np.allclose(a, b)


def test_seed_resolution(monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)
    assert resolve_seed(None, 5) == 5
    monkeypatch.setenv(SEED_ENV, "42")
    assert resolve_seed(None, 5) == 42
    assert resolve_seed(3, 5) == 3


def test_misaligned_steps_rejected():
    assert steps_per(0.5, 0.125) == 4
    with pytest.raises(ValueError):
        steps_per(0.3, 0.125)
    with pytest.raises(ValueError):
        steps_per(0.0625, 0.125)
    with pytest.raises(ValueError):
        NoiseStream(0, 0.1, 2).ensemble_increments(0, 1, 3, 0, 0.1)
