import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import antidiagonal_mean_loops, hankel_loops, pearson_loops, prefix_scan, ssa_eig
from windcast.pssa import (
    PssaConfig,
    decompose,
    diagonal_average,
    embed,
    pearson,
    pssa_denoise,
    select_prefix,
)
from windcast.series import DataError, TimeSeries

series_st = st.lists(
    st.floats(-100, 100, allow_nan=False, allow_infinity=False), min_size=3, max_size=60
)


def sinusoid(n=200, period=20, amp=1.0):
    return amp * np.sin(2 * np.pi * np.arange(n) / period)


class TestEmbed:
    def test_small(self):
        assert embed([1, 2, 3, 4], 2).tolist() == [[1, 2, 3], [2, 3, 4]]

    def test_single_column(self):
        assert embed([1, 2, 3, 4], 4).tolist() == [[1], [2], [3], [4]]

    @pytest.mark.parametrize("S", [1, 5])
    def test_out_of_range(self, S):
        with pytest.raises(ValueError):
            embed([1, 2, 3, 4], S)

    @given(series_st, st.data())
    def test_matches_loops(self, xs, data):
        S = data.draw(st.integers(2, len(xs)))
        assert embed(xs, S).tolist() == hankel_loops(xs, S)


class TestDiagonalAverage:
    def test_hankel_fixed_point(self):
        assert diagonal_average(embed([1, 2, 3, 4], 2)).tolist() == [1, 2, 3, 4]

    def test_square(self):
        assert diagonal_average(np.array([[1, 3], [2, 4]])).tolist() == [1, 2.5, 4]

    def test_row(self):
        assert diagonal_average(np.array([[4.0, 5.0, 6.0]])).tolist() == [4, 5, 6]

    @given(st.integers(1, 7), st.integers(1, 7), st.data())
    def test_matches_loops(self, s, k, data):
        m = np.array(data.draw(st.lists(st.floats(-10, 10), min_size=s * k, max_size=s * k))).reshape(s, k)
        np.testing.assert_allclose(diagonal_average(m), antidiagonal_mean_loops(m.tolist()), atol=1e-12)

    @given(series_st, st.data())
    def test_inverts_embed(self, xs, data):
        S = data.draw(st.integers(2, len(xs)))
        assert diagonal_average(embed(xs, S)).tolist() == TimeSeries(xs).values.tolist()


class TestDecompose:
    def test_constant_is_rank_one(self):
        d = decompose([5.0] * 5, 3)
        assert d.rank == 1
        np.testing.assert_allclose(d.components[0], 5.0, atol=1e-10)
        sig, comps = ssa_eig([5.0] * 5, 3)
        assert len(comps) == 1
        assert d.singular_values[0] == pytest.approx(sig[0], rel=1e-10)

    def test_zero_series(self):
        d = decompose(np.zeros(10), 4)
        assert d.rank == 0
        assert np.all(d.singular_values == 0)
        assert np.all(d.reconstruct() == 0)

    def test_sinusoid_energy(self):
        d = decompose(sinusoid(), 15)
        e = d.singular_values**2
        # frozen from the eigendecomposition oracle: top two carry ~100%
        assert e[:2].sum() / e.sum() >= 0.999

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            decompose(np.array([1.0, np.inf, 2.0]), 2)

    def test_matches_eig_oracle(self):
        c = np.random.default_rng(11).normal(size=80)
        d = decompose(c, 12)
        sig, comps = ssa_eig(c, 12)
        np.testing.assert_allclose(d.singular_values, sig, rtol=1e-8)
        assert d.rank == len(comps)
        for mine, ref in zip(d.components, comps):
            np.testing.assert_allclose(mine, ref, atol=1e-8)

    @settings(max_examples=60)
    @given(series_st, st.data())
    def test_exact_reconstruction_and_energy(self, xs, data):
        S = data.draw(st.integers(2, len(xs)))
        c = np.array(xs)
        d = decompose(c, S)
        scale = max(np.abs(c).max(), 1e-300)
        assert np.abs(d.reconstruct() - c).max() <= 1e-8 * scale + 1e-300
        fro = np.sum(embed(c, S) ** 2)
        assert np.sum(d.singular_values**2) == pytest.approx(fro, rel=1e-6, abs=1e-12)
        assert np.all(np.diff(d.singular_values) <= 1e-12 * max(d.singular_values[0], 1))
        assert d.rank <= min(S, len(c) - S + 1)


class TestPearson:
    def test_identity_and_flip(self):
        a = np.array([1.0, 4.0, 2.0, 8.0])
        assert pearson(a, a) == pytest.approx(1.0)
        assert pearson(a, -a) == pytest.approx(-1.0)

    def test_hand_value(self):
        assert pearson([1, 2, 3], [1, 2, 4]) == pytest.approx(0.98198, abs=1e-5)
        assert pearson([1, 2, 3], [1, 2, 4]) == pytest.approx(3 / np.sqrt(2 * 14 / 3), abs=1e-14)

    def test_errors(self):
        with pytest.raises(ValueError):
            pearson([1, 1, 1], [1, 2, 3])
        with pytest.raises(ValueError):
            pearson([1, 2], [1, 2, 3])

    @given(
        st.lists(st.floats(-50, 50), min_size=3, max_size=30),
        st.floats(0.1, 10),
        st.floats(-10, 10),
        st.data(),
    )
    def test_symmetric_and_affine_invariant(self, xs, alpha, beta, data):
        ys = data.draw(st.lists(st.floats(-50, 50), min_size=len(xs), max_size=len(xs)))
        a, b = np.array(xs), np.array(ys)
        if np.ptp(a) < 1e-3 or np.ptp(b) < 1e-3:
            return
        r = pearson(a, b)
        assert -1 <= r <= 1
        assert r == pytest.approx(pearson(b, a), abs=1e-12)
        assert r == pytest.approx(pearson(alpha * a + beta, b), abs=1e-9)
        assert r == pytest.approx(pearson_loops(list(a), list(b)), abs=1e-9)


class TestPssaDenoise:
    def test_noiseless_sinusoid_keeps_two(self):
        c = sinusoid()
        res = pssa_denoise(TimeSeries(c), PssaConfig(15, 0.99))
        assert res.m_used == 2
        assert res.achieved_r >= 0.99
        sig, comps = ssa_eig(c, 15)
        assert prefix_scan(comps, c, 0.99)[0] == 2

    def test_strict_threshold_on_noise_keeps_everything(self):
        w = np.random.default_rng(0).standard_normal(100)
        res = pssa_denoise(TimeSeries(w), PssaConfig(15, 1 - 1e-12))
        assert res.m_used == res.decomposition.rank == 15
        np.testing.assert_allclose(res.denoised.values, w, atol=1e-10)

    def test_noisy_sinusoid_gets_closer_to_clean(self):
        rng = np.random.default_rng(42)
        clean = sinusoid(300, 25)
        noisy = clean + rng.normal(0, 0.2, 300)
        res = pssa_denoise(TimeSeries(noisy), PssaConfig(15, 0.99))
        # oracle run: m = 9, r = 0.99178, rmse 0.1485 vs 0.1859
        assert res.m_used == 9
        assert res.achieved_r == pytest.approx(0.9917835072912858, abs=1e-9)
        rmse_d = np.sqrt(np.mean((res.denoised.values - clean) ** 2))
        rmse_n = np.sqrt(np.mean((noisy - clean) ** 2))
        assert rmse_d < rmse_n

    def test_low_noise_can_stop_inside_a_pair(self):
        # a lone member of the sinusoid pair already correlates above 0.99, so the
        # prefix rule stops at m = 1 and the reconstruction has the wrong amplitude
        rng = np.random.default_rng(5)
        clean = 2.0 * sinusoid(300, 31.3)
        noisy = clean + rng.normal(0, 0.1, 300)
        res = pssa_denoise(TimeSeries(noisy), PssaConfig(15, 0.99))
        sig, comps = ssa_eig(noisy, 15)
        assert res.m_used == prefix_scan(comps, noisy, 0.99)[0] == 1
        rmse_d = np.sqrt(np.mean((res.denoised.values - clean) ** 2))
        assert rmse_d > np.sqrt(np.mean((noisy - clean) ** 2))
        assert np.sqrt(np.mean((res.decomposition.reconstruct(2) - clean) ** 2)) < rmse_d

    def test_constant_input_rejected(self):
        with pytest.raises(DataError):
            pssa_denoise(TimeSeries(np.full(30, 3.0)))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            PssaConfig(1, 0.99)
        with pytest.raises(ValueError):
            PssaConfig(15, 0.0)
        with pytest.raises(ValueError):
            PssaConfig(15, 1.5)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.integers(20, 90), st.integers(2, 12), st.floats(0.5, 0.9999))
    def test_minimal_prefix(self, seed, n, S, thr):
        rng = np.random.default_rng(seed)
        c = np.cumsum(rng.normal(size=n))
        if np.ptp(c) == 0:
            return
        res = pssa_denoise(TimeSeries(c), PssaConfig(S, thr))
        d = res.decomposition
        assert 1 <= res.m_used <= d.rank
        assert res.achieved_r >= thr or res.m_used == d.rank
        for m in range(1, res.m_used):
            s = d.reconstruct(m)
            if np.ptp(s) > 0:
                assert pearson(s, c) < thr
        assert pearson(d.reconstruct(), c) == pytest.approx(1.0, abs=1e-8)
        assert select_prefix(d, c, thr) == (res.m_used, res.achieved_r)
