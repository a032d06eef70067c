import numpy as np
import pytest

from barkaec import framing
from barkaec.loss import LossConfig, ccmse, consistency_project, project_frames


def frames(rng, n=6, bins=257, scale=1.0):
    return scale * (rng.standard_normal((n, bins))
                    + 1j * rng.standard_normal((n, bins)))


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            LossConfig(alpha=0.0)
        with pytest.raises(ValueError):
            LossConfig(alpha=1.0)
        with pytest.raises(ValueError):
            LossConfig(compression=0.5)
        with pytest.raises(ValueError):
            LossConfig(magnitude_floor=0.0)


class TestCcmse:
    def test_identity_is_zero(self, rng):
        # [TRIVIAL] J(S, S) = 0 exactly
        s = frames(rng)
        assert ccmse(s, s) == 0.0

    def test_empty_is_zero(self):
        assert ccmse(np.zeros((0, 257)), np.zeros((0, 257))) == 0.0

    def test_shape_mismatch(self, rng):
        with pytest.raises(ValueError):
            ccmse(frames(rng, n=3), frames(rng, n=4))

    def test_single_bin_magnitude_only(self):
        # [DERIVED] one interior bin, |a|=1 vs |b|=0 (floored): mag term
        # (1 - floor^0.3)^2; the zero reference has zero phase vector so
        # the phase term is |1 - 0|^2 = 1; weight 2
        a = np.zeros((1, 257), dtype=complex)
        b = np.zeros((1, 257), dtype=complex)
        a[0, 10] = 1.0
        cfg = LossConfig(alpha=0.3)
        f = cfg.magnitude_floor ** 0.3
        want = 2.0 * ((1 - cfg.alpha) * (1 - f) ** 2 + cfg.alpha * 1.0)
        assert ccmse(a, b, cfg) == pytest.approx(want, rel=1e-12)

    def test_opposite_phase_unit_bins(self):
        # [DERIVED] |a|=|b|=1, opposite phase, one interior bin:
        # mag term 0, phase term |1-(-1)|^2 = 4, weight 2 -> J = 8*alpha.
        # At alpha = 0.5 the formula value is 4.0 on weight-1 bins, i.e.
        # 2.0 for a DC-only pair.
        a = np.zeros((1, 257), dtype=complex)
        b = np.zeros((1, 257), dtype=complex)
        a[0, 0] = 1.0
        b[0, 0] = -1.0
        assert ccmse(a, b, LossConfig(alpha=0.5)) == pytest.approx(2.0, rel=1e-12)
        a2, b2 = a.copy(), b.copy()
        a2[0, 0] = b2[0, 0] = 0.0
        a2[0, 7] = 1.0
        b2[0, 7] = -1.0
        assert ccmse(a2, b2, LossConfig(alpha=0.3)) == pytest.approx(8 * 0.3, rel=1e-12)

    def test_symmetry(self, rng):
        a, b = frames(rng), frames(rng)
        assert ccmse(a, b) == pytest.approx(ccmse(b, a), rel=1e-12)

    def test_dc_nyquist_weighted_once(self):
        a = np.zeros((1, 257), dtype=complex)
        b = np.zeros((1, 257), dtype=complex)
        a[0, 0] = 2.0
        a2 = np.zeros_like(a)
        a2[0, 5] = 2.0
        assert ccmse(a2, b) == pytest.approx(2.0 * ccmse(a, b), rel=1e-12)

    def test_monotone_in_magnitude_error(self):
        # fixing the reference, growing the estimate grows the loss
        b = np.zeros((1, 257), dtype=complex)
        b[0, 20] = 1.0
        vals = []
        for t in (1.0, 1.5, 2.0, 4.0):
            a = np.zeros_like(b)
            a[0, 20] = t
            vals.append(ccmse(a, b))
        assert vals[0] == 0.0
        assert all(x < y for x, y in zip(vals, vals[1:]))

    def test_normalized_divides_by_frames(self, rng):
        a, b = frames(rng, n=4), frames(rng, n=4)
        assert ccmse(a, b, normalized=True) == pytest.approx(ccmse(a, b) / 4.0)

    def test_alpha_limits_bracket(self, rng):
        # loss interpolates between the pure-magnitude and phase-aware terms
        a, b = frames(rng), frames(rng)
        lo = ccmse(a, b, LossConfig(alpha=1e-9))
        hi = ccmse(a, b, LossConfig(alpha=1 - 1e-9))
        mid = ccmse(a, b, LossConfig(alpha=0.5))
        assert min(lo, hi) <= mid <= max(lo, hi)


class TestConsistency:
    def test_projection_idempotent(self, rng, stft_cfg):
        # project twice == project once (interior frames)
        f = frames(rng, n=24)
        p1 = project_frames(f, stft_cfg)
        p2 = project_frames(p1, stft_cfg)
        guard = stft_cfg.frame_len // stft_cfg.hop
        sl = slice(guard, p1.shape[0] - guard)
        num = np.linalg.norm(p2[sl] - p1[sl])
        assert num <= 1e-9 * np.linalg.norm(p1[sl])

    def test_consistent_frames_fixed_point(self, rng, stft_cfg):
        # frames produced by analysis are already consistent
        x = rng.standard_normal(8192)
        f = framing.analyze(x, stft_cfg)
        p = project_frames(f, stft_cfg)
        guard = stft_cfg.frame_len // stft_cfg.hop
        sl = slice(guard, f.shape[0] - guard)
        assert np.linalg.norm(p[sl] - f[sl]) <= 1e-9 * np.linalg.norm(f[sl])

    def test_consistency_project_is_analysis(self, rng, stft_cfg):
        x = rng.standard_normal(4096)
        assert np.array_equal(consistency_project(x, stft_cfg),
                              framing.analyze(x, stft_cfg))
