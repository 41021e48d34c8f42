import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from cubecov.errors import PreconditionError
from cubecov.placement import (
    MASK64,
    PLACEMENT_STREAM,
    SAMPLING_STREAM,
    SELECTION_STREAM,
    SeedSpec,
    mix64,
    place_uniform,
    read_placement,
    write_placement,
)


def test_mix64_known_values():
    # SplitMix64 outputs for state 0: the generator adds the golden gamma before the finalizer
    gamma = 0x9E3779B97F4A7C15
    assert mix64(gamma) == 0xE220A8397B1DCDAF
    assert mix64(2 * gamma & MASK64) == 0x6E789E6AA1B965F4


def test_mix64_is_injective_on_a_sample():
    xs = list(range(1000)) + [MASK64 - k for k in range(1000)]
    assert len({mix64(x) for x in xs}) == len(xs)


def test_fixed_seed_range():
    s = place_uniform(9, 2, 1.0, SeedSpec(7))
    assert s.positions.shape == (9, 2)
    assert np.all((s.positions >= 0) & (s.positions < 1))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, MASK64), st.integers(0, MASK64), st.integers(1, 50), st.integers(1, 4))
def test_deterministic(master, trial, n, d):
    a = place_uniform(n, d, 1.0, SeedSpec(master, trial))
    b = place_uniform(n, d, 1.0, SeedSpec(master, trial))
    assert a == b


@settings(max_examples=40, deadline=None)
@given(st.integers(0, MASK64), st.integers(1, 50), st.integers(1, 3),
       st.sampled_from([1 / 3, 2.0, 0.1, 7.5, 1e-3]))
def test_scaling_is_exact(master, n, d, y):
    unit = place_uniform(n, d, 1.0, SeedSpec(master))
    scaled = place_uniform(n, d, y, SeedSpec(master))
    assert np.array_equal(scaled.positions, unit.positions * y)


def test_streams_and_trials_differ():
    seed = SeedSpec(1, 2)
    draws = [seed.generator(s).random(4) for s in (PLACEMENT_STREAM, SELECTION_STREAM, SAMPLING_STREAM)]
    assert not np.array_equal(draws[0], draws[1])
    assert not np.array_equal(draws[1], draws[2])
    assert not np.array_equal(SeedSpec(1, 3).generator().random(4), draws[0])
    assert not np.array_equal(SeedSpec(2, 2).generator().random(4), draws[0])


def test_doubles_are_53_bit():
    u = SeedSpec(11).generator().random(10_000)
    assert np.all(u * 2.0**53 == np.floor(u * 2.0**53))


def test_mean_law_of_large_numbers():
    s = place_uniform(100_000, 2, 1.0, SeedSpec(2015))
    assert np.all(np.abs(s.positions.mean(axis=0) - 0.5) <= 0.005)


@pytest.mark.parametrize("master", [0, 1, 2015, 2**63 + 5])
def test_marginals_pass_ks(master):
    s = place_uniform(10_000, 3, 1.0, SeedSpec(master))
    for k in range(3):
        # 1% critical value of the one-sample KS statistic for n = 10^4
        assert stats.kstest(s.positions[:, k], "uniform").statistic < 1.628 / np.sqrt(10_000)


def test_seed_bounds():
    with pytest.raises(PreconditionError):
        SeedSpec(-1)
    with pytest.raises(PreconditionError):
        SeedSpec(0, MASK64 + 1)


def test_rejects_bad_arguments():
    with pytest.raises(PreconditionError):
        place_uniform(0, 2, 1.0, 0)
    with pytest.raises(PreconditionError):
        place_uniform(4, 2, -1.0, 0)


def test_csv_round_trip(tmp_path):
    s = place_uniform(50, 3, 2.5, SeedSpec(4))
    path = tmp_path / "p.csv"
    write_placement(s, path)
    assert path.read_text().splitlines()[0] == "sensor_id,x1,x2,x3"
    back = read_placement(path, 2.5, s.r)
    assert back == s


def test_read_rejects_bad_header(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("id,x,y\n0,0.1,0.2\n")
    with pytest.raises(PreconditionError):
        read_placement(path)
