import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slowsid import (
    MultisineSignal,
    SamplingGrid,
    check_no_leakage,
    check_non_overlap,
    dtft,
    evaluate_multisine,
    fold_frequency,
    regressor,
    regressor_matrix,
)

PI = math.pi


def test_multisine_rejects_bad_components():
    with pytest.raises(ValueError):
        MultisineSignal(0.0)
    with pytest.raises(ValueError):
        MultisineSignal(1.0, ((1.0, 2.0, 0.0), (1.0, 1.0, 0.0)))
    with pytest.raises(ValueError):
        MultisineSignal(1.0, ((0.0, 2.0, 0.0),))
    with pytest.raises(ValueError):
        MultisineSignal(1.0, ((1.0, -2.0, 0.0),))


def test_evaluate_dc_only():
    assert evaluate_multisine(MultisineSignal(1.0), 17.3) == 1.0


def test_evaluate_single_cosine():
    u = MultisineSignal(1.0, ((1.0, PI, 0.0),))
    assert evaluate_multisine(u, 1.0) == pytest.approx(0.0, abs=1e-15)


def test_evaluate_matches_termwise_sum():
    rng = np.random.default_rng(7)
    w = np.sort(rng.uniform(0.1, 30, 13))
    u = MultisineSignal.from_arrays(1.0, 1.0, w, rng.uniform(0, 2 * PI, 13))
    t = 0.5 * np.arange(1, 201)
    got = evaluate_multisine(u, t)
    for k, tk in enumerate(t):
        ref = u.dc_amplitude
        for c in u.components:
            ref += c.amplitude * math.cos(c.angular_frequency * tk + c.phase)
        assert abs(got[k] - ref) <= 1e-12


def test_regressor_dc_only():
    np.testing.assert_array_equal(regressor(MultisineSignal(2.0), SamplingGrid(0.5, 3), 2), [2.0])


def test_regressor_analytic():
    u = MultisineSignal(1.0, ((1.0, PI, 0.0),))
    z = regressor(u, SamplingGrid(0.5, 4), 1)
    np.testing.assert_allclose(z, [1, 0.5j, -0.5j], atol=1e-15)


def test_regressor_index_range():
    u = MultisineSignal(1.0)
    with pytest.raises(IndexError):
        regressor(u, SamplingGrid(0.5, 4), 0)
    with pytest.raises(IndexError):
        regressor(u, SamplingGrid(0.5, 4), 5)


def test_regressor_unity_system_reproduces_input(input_a):
    grid = SamplingGrid(0.5, 300)
    ones = np.ones(2 * input_a.M + 1)
    for k in (1, 17, 300):
        x = regressor(input_a, grid, k).conj() @ ones
        assert x.real == pytest.approx(evaluate_multisine(input_a, k * 0.5), abs=1e-12)
        assert abs(x.imag) < 1e-12


def test_regressor_matrix_rows(input_b):
    grid = SamplingGrid(0.5, 50)
    Z = regressor_matrix(input_b, grid)
    for k in (1, 25, 50):
        np.testing.assert_allclose(Z[k - 1], regressor(input_b, grid, k), rtol=1e-13)


def _fold_oracle(w, h):
    return min(abs(w - 2 * PI * n / h) for n in range(-3, 4))


def test_fold_5pi_onto_pi():
    line = fold_frequency(5 * PI, 0.5)
    assert line.folded_frequency == pytest.approx(PI, rel=1e-14)
    assert line.classification == "distinct"


def test_fold_7pi_over_2():
    line = fold_frequency(3.5 * PI, 0.5)
    assert line.folded_frequency == pytest.approx(_fold_oracle(3.5 * PI, 0.5), rel=1e-14)
    assert line.folded_frequency == pytest.approx(PI / 2, rel=1e-14)


def test_fold_at_nyquist():
    line = fold_frequency(PI / 0.5, 0.5)
    assert line.classification == "at_nyquist_multiple"
    assert line.nyquist_multiple == 1
    assert fold_frequency(4 * PI / 0.5, 0.5).nyquist_multiple == 4


def test_non_overlap_violated_by_5pi(input_b):
    report = check_non_overlap(input_b, 0.5)
    assert not report.satisfied
    # 5pi - pi = 4pi, one full sampling band at h = 0.5
    assert [(v.first, v.second, v.n, v.kind) for v in report.violations] == [(2, 4, 1, "difference")]


def test_non_overlap_nonparametric_input(input_a):
    assert check_non_overlap(input_a, 0.5).satisfied


def test_non_overlap_sum_and_nyquist():
    h = 0.5
    u = MultisineSignal.from_arrays(1.0, 1.0, [1.0, 4 * PI - 1.0])
    (v,) = check_non_overlap(u, h).violations
    assert v.kind == "sum" and v.n == 1
    u = MultisineSignal.from_arrays(1.0, 1.0, [1.0, 2 * PI])
    assert check_non_overlap(u, h).violations[0].second == "nyquist"


def test_non_overlap_rejects_bad_tol():
    with pytest.raises(ValueError):
        check_non_overlap(MultisineSignal(1.0), 0.5, tol=0.0)


@given(st.lists(st.floats(0.01, 0.999), min_size=1, max_size=8, unique=True), st.floats(0.05, 5))
def test_sub_nyquist_always_satisfied(fracs, h):
    w = sorted(f * PI / h for f in fracs)
    if min(np.diff([0.0] + w), default=1) <= 1e-6:
        return
    assert check_non_overlap(MultisineSignal.from_arrays(1.0, 1.0, w), h).satisfied


def test_leakage_aligned_bin():
    for N, h in ((100, 0.5), (2000, 0.1), (37, 3.0)):
        u = MultisineSignal.from_arrays(1.0, 1.0, [2 * PI * 3 / (N * h)])
        assert check_no_leakage(u, SamplingGrid(h, N))


def test_leakage_misaligned():
    # 0.1 * 2000 * 0.5 / (2 pi) = 15.915...
    u = MultisineSignal.from_arrays(1.0, 1.0, [0.1])
    assert not check_no_leakage(u, SamplingGrid(0.5, 2000))


def test_leakage_two_bins():
    N, h = 240, 0.5
    u = MultisineSignal.from_arrays(1.0, 1.0, [2 * PI * 5 / (N * h), 2 * PI * 12 / (N * h)])
    assert check_no_leakage(u, SamplingGrid(h, N))


def test_dtft_constant():
    assert dtft(np.ones(37), 0.0, 0.5) == pytest.approx(37.0)


def test_dtft_periodic():
    x = np.random.default_rng(1).standard_normal(64)
    h = 0.5
    for w in (0.0, 0.7, 3.3, 11.0):
        a, b = dtft(x, w, h), dtft(x, w + 2 * PI / h, h)
        assert abs(a - b) <= 1e-10 * abs(a)


def test_dtft_aligned_cosine():
    N, h, m = 200, 0.5, 7
    w0 = 2 * PI * m / (N * h)
    x = np.cos(w0 * h * np.arange(1, N + 1))
    # sum cos(w0 kh) e^{-i w0 kh} = N/2 + (1/2) sum e^{-2 i w0 kh}, the latter zero for 2m != 0 mod N
    geo = sum(cmath.exp(-2j * w0 * k * h) for k in range(1, N + 1))
    expected = N / 2 + geo / 2
    assert abs(dtft(x, w0, h) - expected) <= 1e-9 * abs(expected)
    assert abs(dtft(x, w0, h) - N / 2) <= 1e-9 * N / 2


def test_dtft_rejects_empty():
    with pytest.raises(ValueError):
        dtft([], 0.0, 1.0)


@settings(max_examples=25)
@given(st.integers(1, 40), st.floats(0.1, 3.0), st.integers(0, 2**32 - 1))
def test_dtft_matches_direct_dft(N, h, seed):
    x = np.random.default_rng(seed).standard_normal(N)
    for n in range(N):
        w = 2 * PI * n / (N * h)
        ref = sum(x[k - 1] * cmath.exp(-2j * PI * n * k / N) for k in range(1, N + 1))
        got = dtft(x, w, h)
        assert abs(got - ref) <= 1e-10 * max(1.0, abs(ref))
