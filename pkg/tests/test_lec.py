import numpy as np
import pytest

from barkaec import subband
from barkaec.lec import LecConfig, lec_init, lec_reset, lec_run, lec_step


@pytest.fixture()
def state():
    return lec_init(LecConfig(), 257)


def echo_frames(rng, proto, n_samples, delay=64, gain=0.5):
    x = rng.standard_normal(n_samples)
    y = np.zeros(n_samples)
    y[delay:] = gain * x[:-delay]
    return x, y, subband.fb_analyze(x, proto), subband.fb_analyze(y, proto)


class TestConfig:
    def test_defaults(self):
        cfg = LecConfig()
        assert cfg.filter_lengths == (4, 8, 16, 32)
        assert 0 < cfg.smoothing_coeff < 1

    def test_validation(self):
        with pytest.raises(ValueError):
            LecConfig(filter_lengths=())
        with pytest.raises(ValueError):
            LecConfig(step_size=1.5)
        with pytest.raises(ValueError):
            LecConfig(regularization=0.0)

    def test_beta_scales_time_constant(self):
        slow = LecConfig(psd_smoothing=2.0).smoothing_coeff
        fast = LecConfig(psd_smoothing=0.5).smoothing_coeff
        assert fast < LecConfig().smoothing_coeff < slow


class TestStep:
    def test_zero_excitation(self, state, rng):
        # [TRIVIAL] x = 0 forever -> coefficients unchanged, e = y exactly
        for _ in range(20):
            y = rng.standard_normal(257) + 1j * rng.standard_normal(257)
            e, d = lec_step(state, np.zeros(257, dtype=complex), y)
            assert np.array_equal(e, y)
            assert np.all(d == 0.0)
        assert np.all(state.coeffs == 0.0)

    def test_zero_step_size_freezes(self, rng):
        # [TRIVIAL] mu0 = 0 -> coefficients stay at initialization
        st = lec_init(LecConfig(step_size=0.0, step_floor=0.0), 257)
        for _ in range(10):
            x = rng.standard_normal(257) + 1j * rng.standard_normal(257)
            y = rng.standard_normal(257) + 1j * rng.standard_normal(257)
            lec_step(st, x, y)
        assert np.all(st.coeffs == 0.0)

    def test_non_finite_rejected_state_preserved(self, state, rng):
        x = rng.standard_normal(257) + 0j
        y = rng.standard_normal(257) + 0j
        lec_step(state, x, y)
        before = state.coeffs.copy()
        frames = state.frame_count
        bad = x.copy()
        bad[5] = np.nan
        with pytest.raises(ValueError):
            lec_step(state, bad, y)
        assert np.array_equal(state.coeffs, before)
        assert state.frame_count == frames

    def test_shape_mismatch(self, state):
        with pytest.raises(ValueError):
            lec_step(state, np.zeros(100, dtype=complex), np.zeros(257, dtype=complex))

    def test_selection_is_minimum_error_member(self, state, rng, proto):
        # bank selection invariant, assertable each frame
        _, _, xs, ys = echo_frames(rng, proto, 40960)
        for i in range(xs.shape[0]):
            lec_step(state, xs[i], ys[i])
            assert np.array_equal(state.selected, np.argmin(state.pe, axis=0))


class TestConvergence:
    def test_erle_on_delay_gain_path(self, rng, proto):
        # [DERIVED] simulation: converged cancellation well above 20 dB
        x, y, xs, ys = echo_frames(rng, proto, 5 * 16000)
        st = lec_init(LecConfig(), proto.num_streams)
        e_sub, _ = lec_run(st, xs, ys)
        e = subband.fb_synthesize(e_sub, proto)
        tail = slice(3 * 16000, 5 * 16000)
        erle = 10 * np.log10(np.sum(y[tail] ** 2) / np.sum(e[tail][: len(y[tail])] ** 2))
        assert erle >= 30.0

    def test_smoothed_error_monotone_after_convergence(self, rng, proto):
        # monotone convergence at the 1-s window level after the first 2 s
        x, y, xs, ys = echo_frames(rng, proto, 6 * 16000)
        st = lec_init(LecConfig(), proto.num_streams)
        e_sub, _ = lec_run(st, xs, ys)
        fps = 16000 // 128
        win = [float(np.sum(np.abs(e_sub[i:i + fps]) ** 2))
               for i in range(2 * fps, e_sub.shape[0] - fps, fps)]
        assert all(b <= a * 1.05 for a, b in zip(win, win[1:]))

    def test_scale_covariance(self, rng, proto):
        # scaling x and y by a scales e by a, elementwise to 1e-9
        _, _, xs, ys = echo_frames(rng, proto, 32768)
        base, _ = lec_run(lec_init(LecConfig(), proto.num_streams), xs, ys)
        for a in (0.25, 13.0):
            scaled, _ = lec_run(lec_init(LecConfig(), proto.num_streams),
                                a * xs, a * ys)
            dev = np.max(np.abs(scaled - a * base)) / max(np.max(np.abs(a * base)), 1e-300)
            assert dev <= 1e-9


class TestState:
    def test_reset(self, state, rng):
        x = rng.standard_normal(257) + 0j
        lec_step(state, x, x)
        lec_reset(state)
        assert np.all(state.coeffs == 0.0)
        assert np.all(state.px == 0.0)
        assert state.pref[0] == 0.0
        assert state.frame_count == 0

    def test_deterministic(self, rng, proto):
        _, _, xs, ys = echo_frames(rng, proto, 16384)
        a, _ = lec_run(lec_init(LecConfig(), proto.num_streams), xs, ys)
        b, _ = lec_run(lec_init(LecConfig(), proto.num_streams), xs, ys)
        assert np.array_equal(a, b)

    def test_snapshot_written(self, tmp_path, state, rng):
        from barkaec.lec import save_state_snapshot
        x = rng.standard_normal(257) + 0j
        lec_step(state, x, x)
        path = tmp_path / "lec.bin"
        save_state_snapshot(path, state)
        assert path.read_bytes()[:4] == b"LECS"
