"""Hybrid acoustic echo control: subband NLMS canceller + Bark postfilter.

Modules:
    framing     sqrt-Hann STFT analysis/synthesis (hop 128, frame 512)
    subband     oversampled DFT filterbank for the canceller path
    lec         subband NLMS bank with variable step size
    bark        Bark-scale band mapping (pooling / mask un-mapping)
    postfilter  FC/GRU mask estimator inference + weights file + audit
    loss        complex compressed spectral MSE (CCMSE)
    scenario    synthetic echo scenario generator with ground truth
    pipeline    streaming end-to-end orchestration
    metrics     ERLE / RTF evaluation helpers
    backend     numba / numpy kernel selection (BARKAEC_BACKEND)
"""

from barkaec.backend import BACKEND_NAME

__version__ = "0.1.0"

__all__ = ["BACKEND_NAME", "__version__"]
