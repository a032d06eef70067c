"""Complex compressed spectral MSE with consistency enforcement.

The loss compares magnitude-compressed spectra (exponent 0.3) with a
weighted phase-aware term:

    J = sum_{k,l} (1-alpha) * (|S~|^c - |S|^c)^2
               +     alpha  * | |S~|^c e^{j phi_S~} - |S|^c e^{j phi_S} |^2

Sums run over one-sided spectra with conjugate-symmetry doubling
(interior bins weighted twice, DC and Nyquist once).  Magnitudes are
floored before exponentiation, since x^0.3 has an unbounded derivative
at zero.
"""

from dataclasses import dataclass

import numpy as np

from barkaec import framing


@dataclass(frozen=True)
class LossConfig:
    alpha: float = 0.3
    compression: float = 0.3
    magnitude_floor: float = 1e-12

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if self.compression != 0.3:
            raise ValueError("compression exponent is fixed at 0.3")
        if self.magnitude_floor <= 0:
            raise ValueError("magnitude_floor must be positive")


def consistency_project(s_hat, cfg=framing.StftConfig()):
    """Re-analysis of a synthesized time signal.

    The returned frames lie in the consistent-spectrogram subspace; for
    signals produced by :func:`barkaec.framing.synthesize` this is the
    consistency-enforcement step applied before the loss.
    """
    return framing.analyze(s_hat, cfg)


def project_frames(frames, cfg=framing.StftConfig()):
    """Project arbitrary complex frames onto the consistent subspace
    (synthesize then re-analyze); idempotent on interior frames."""
    return framing.analyze(framing.synthesize(frames, cfg), cfg)


def _onesided_weights(n_bins):
    w = np.full(n_bins, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return w


def ccmse(s_tilde, s_ref, cfg=LossConfig(), normalized=False):
    """Compressed complex MSE between two frame sequences.

    ``normalized=True`` divides by the frame count for reporting; the
    default is the plain double sum.
    """
    st = np.atleast_2d(np.asarray(s_tilde, dtype=np.complex128))
    sr = np.atleast_2d(np.asarray(s_ref, dtype=np.complex128))
    if st.shape != sr.shape:
        raise ValueError(f"shape mismatch: {st.shape} vs {sr.shape}")
    if st.size == 0:
        return 0.0

    floor = cfg.magnitude_floor
    c = cfg.compression
    mt = np.maximum(np.abs(st), floor) ** c
    mr = np.maximum(np.abs(sr), floor) ** c
    phase_t = st / np.maximum(np.abs(st), floor)
    phase_r = sr / np.maximum(np.abs(sr), floor)

    w = _onesided_weights(st.shape[1])
    mag_term = (mt - mr) ** 2
    phase_term = np.abs(mt * phase_t - mr * phase_r) ** 2
    j = np.sum(w * ((1.0 - cfg.alpha) * mag_term + cfg.alpha * phase_term))
    if normalized:
        j /= st.shape[0]
    return float(j)
