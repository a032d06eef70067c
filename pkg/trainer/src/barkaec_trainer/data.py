"""Scenario bundle loading and canceller-error preparation.

A bundle directory holds one 32-bit float WAV per component (s, n, x,
x_prime, d, y) plus meta.txt.  Training additionally needs the linear
canceller's error signal e; when e.wav is missing it is produced by
running the engine CLI (``barkaec process`` without weights emits the
canceller output unchanged).
"""

import os
import subprocess

import numpy as np
from scipy.io import wavfile


def read_wav(path):
    rate, data = wavfile.read(path)
    data = np.asarray(data)
    if data.dtype.kind == "i":
        data = data.astype(np.float64) / float(np.iinfo(data.dtype).max)
    return data.astype(np.float64), int(rate)


def ensure_error_signal(bundle_dir, engine_cmd="barkaec"):
    """Return the path of e.wav, generating it with the engine if needed."""
    e_path = os.path.join(bundle_dir, "e.wav")
    if not os.path.exists(e_path):
        subprocess.run(
            [engine_cmd, "process",
             "--farend", os.path.join(bundle_dir, "x.wav"),
             "--mic", os.path.join(bundle_dir, "y.wav"),
             "--out", e_path],
            check=True, capture_output=True)
    return e_path


def load_clip(bundle_dir, engine_cmd="barkaec"):
    """Load one bundle as float64 arrays: dict with s, x, y, e."""
    out = {}
    for name in ("s", "x", "y"):
        path = os.path.join(bundle_dir, f"{name}.wav")
        out[name], rate = read_wav(path)
        out.setdefault("sample_rate", rate)
    out["e"], _ = read_wav(ensure_error_signal(bundle_dir, engine_cmd))
    n = min(len(out["s"]), len(out["x"]), len(out["y"]), len(out["e"]))
    for name in ("s", "x", "y", "e"):
        out[name] = out[name][:n]
    return out


def find_bundles(dataset_dir):
    """Sorted bundle subdirectories (identified by a y.wav inside)."""
    if not os.path.isdir(dataset_dir):
        raise ValueError(f"dataset directory {dataset_dir!r} does not exist")
    dirs = sorted(
        os.path.join(dataset_dir, d) for d in os.listdir(dataset_dir)
        if os.path.exists(os.path.join(dataset_dir, d, "y.wav")))
    if os.path.exists(os.path.join(dataset_dir, "y.wav")):
        dirs.insert(0, dataset_dir)
    if not dirs:
        raise ValueError(f"no scenario bundles under {dataset_dir!r}")
    return dirs


def load_dataset(dataset_dir, engine_cmd="barkaec"):
    return [load_clip(d, engine_cmd) for d in find_bundles(dataset_dir)]
