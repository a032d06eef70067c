"""Bark-scale band mapping for the postfilter features and mask.

The mapping matrix assigns each one-sided DFT bin's energy to auditory
bands whose edges are uniformly spaced on the Bark axis (Traunmueller
conversion) between 0 Hz and f_s/2.  Each bin of full width f_s/K is
split among the bands overlapping it, so per-bin weights over all bands
sum to 1 for bins whose span lies inside [0, f_s/2]; the DC and Nyquist
bins are half covered (weight sum 0.5).

Forward application pools power spectra into band energies; the
transpose maps a band-domain mask back to bins as a convex combination,
so masks in [0, 1] stay in [0, 1].
"""

import struct
from dataclasses import dataclass

import numpy as np

_MAGIC_BARK = b"BMAP"

DEFAULT_NUM_BANDS = 86
DEFAULT_LOG_FLOOR = 1e-12


def hz_to_bark(f):
    """Traunmueller's closed-form Hz -> Bark conversion."""
    f = np.asarray(f, dtype=np.float64)
    return 26.81 * f / (1960.0 + f) - 0.53


def bark_to_hz(z):
    z = np.asarray(z, dtype=np.float64)
    return 1960.0 * (z + 0.53) / (26.28 - z)


@dataclass(frozen=True)
class BarkMap:
    matrix: np.ndarray      # (K/2+1, B), row = bin, entries >= 0
    band_edges: np.ndarray  # (B+1,) Hz, strictly increasing, 0 .. f_s/2
    sample_rate: int
    dft_size: int

    @property
    def num_bands(self):
        return self.matrix.shape[1]

    @property
    def num_bins(self):
        return self.matrix.shape[0]


def build_bark_map(dft_size=512, num_bands=DEFAULT_NUM_BANDS, sample_rate=16000):
    """Build the bin-to-band overlap matrix.

    Entry (k, b) is the fraction of bin k's width [(2k-1), (2k+1)] * f_s/(2K)
    covered by band b, i.e. max(0, min(f_u, bin_hi) - max(f_l, bin_lo)) / (f_s/K).
    """
    k_size, b_size = int(dft_size), int(num_bands)
    n_bins = k_size // 2 + 1
    if b_size > n_bins:
        raise ValueError("more bands than DFT bins")
    if b_size < 1:
        raise ValueError("need at least one band")

    z = np.linspace(hz_to_bark(0.0), hz_to_bark(sample_rate / 2.0), b_size + 1)
    edges = bark_to_hz(z)
    edges[0] = 0.0
    edges[-1] = sample_rate / 2.0

    bin_width = sample_rate / k_size
    k = np.arange(n_bins)
    bin_lo = (2 * k - 1) * sample_rate / (2.0 * k_size)
    bin_hi = (2 * k + 1) * sample_rate / (2.0 * k_size)

    overlap = (np.minimum(edges[None, 1:], bin_hi[:, None])
               - np.maximum(edges[None, :-1], bin_lo[:, None]))
    matrix = np.maximum(0.0, overlap) / bin_width
    return BarkMap(matrix=matrix, band_edges=edges,
                   sample_rate=int(sample_rate), dft_size=k_size)


def pool_energy(bark_map, power_spectrum):
    """Band energies Z(b) = sum_k B(k,b) * P(k).

    Accepts a single spectrum (n_bins,) or a batch (n_frames, n_bins).
    """
    p = np.asarray(power_spectrum, dtype=np.float64)
    if p.shape[-1] != bark_map.num_bins:
        raise ValueError(f"expected {bark_map.num_bins} bins, got {p.shape[-1]}")
    if np.any(p < 0):
        raise ValueError("power spectrum must be nonnegative")
    return p @ bark_map.matrix


def unmap_mask(bark_map, band_mask):
    """Per-bin mask M(k) = sum_b B(k,b) * m(b) (transpose application)."""
    m = np.asarray(band_mask, dtype=np.float64)
    if m.shape[-1] != bark_map.num_bands:
        raise ValueError(f"expected {bark_map.num_bands} bands, got {m.shape[-1]}")
    return m @ bark_map.matrix.T


def log_compress(features, floor=DEFAULT_LOG_FLOOR):
    """Elementwise log10(max(feature, floor))."""
    return np.log10(np.maximum(np.asarray(features, dtype=np.float64), floor))


def save_bark_map(path, bark_map):
    """Flat matrix file: magic, uint32 (K, B, f_s), little-endian float64
    matrix in row-major order, then the B+1 band edges."""
    mat = np.ascontiguousarray(bark_map.matrix, dtype="<f8")
    edges = np.ascontiguousarray(bark_map.band_edges, dtype="<f8")
    with open(path, "wb") as f:
        f.write(_MAGIC_BARK)
        f.write(struct.pack("<III", bark_map.dft_size, bark_map.num_bands,
                            bark_map.sample_rate))
        f.write(mat.tobytes())
        f.write(edges.tobytes())


def load_bark_map(path):
    with open(path, "rb") as f:
        if f.read(4) != _MAGIC_BARK:
            raise ValueError("not a bark map file")
        k_size, b_size, fs = struct.unpack("<III", f.read(12))
        n_bins = k_size // 2 + 1
        mat = np.frombuffer(f.read(8 * n_bins * b_size), dtype="<f8")
        edges = np.frombuffer(f.read(8 * (b_size + 1)), dtype="<f8")
        if mat.size != n_bins * b_size or edges.size != b_size + 1:
            raise ValueError("truncated bark map file")
    return BarkMap(matrix=mat.reshape(n_bins, b_size).astype(np.float64),
                   band_edges=edges.astype(np.float64),
                   sample_rate=fs, dft_size=k_size)
