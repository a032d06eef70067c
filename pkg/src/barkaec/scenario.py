"""Synthetic scenario generation: echo, noise and nearend mixing with
ground truth retained.

A scenario bundles the nearend speech s, background noise n, farend
reference x, loudspeaker-distorted farend x', echo d and the microphone
mix y = s + n + d (sample-exact, gains already applied to the stored
components).  The augmentation chain covers loudspeaker nonlinearity,
RIR cross-fading with a randomized direct-path gain, clock drift of the
playback path, random bandpass filtering, silence insertion and
SNR/SER-controlled mixing.

Source material comes either from a user-supplied WAV corpus or from the
built-in synthesizer (harmonic bursts for speech, colored noise for
background), so everything runs without external data.
"""

import math
import os
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import signal as sps
from scipy.special import erfc

from barkaec.backend import kernels
from barkaec import wavio

ACTIVITY_GATE_DBFS = -40.0
_GATE_FRAME = 160  # 10 ms at 16 kHz


@dataclass
class ScenarioSpec:
    duration: float = 10.0
    sample_rate: int = 16000
    seed: int = 0
    condition: str = "dt"          # "dt" | "stfe" | "stne"
    snr_db: float | None = None    # None -> U[0, 30]
    ser_db: float | None = None    # None -> U[-30, 10]
    nonlinearity: str | None = None  # None -> 80% nonlinear; "erfc" | "scale" | "none"
    nl_eta: float | None = None
    rir_a: np.ndarray | None = None  # None -> synthetic decaying-noise RIR
    rir_b: np.ndarray | None = None
    crossfade: bool = True
    crossfade_interval: float = 1.0  # seconds, linear ramps
    rir_gain_std: float = 1.0
    clock_drift: float | None = None  # None -> U[-0.01, 0.01]
    bandpass: bool = True
    silence_max: float = 10.0
    source_dir: str | None = None
    remove_nl_dc: bool = False

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.condition not in ("dt", "stfe", "stne"):
            raise ValueError(f"unknown condition {self.condition!r}")
        if self.clock_drift is not None and abs(self.clock_drift) > 0.01:
            raise ValueError("clock drift limited to 1%")


@dataclass
class Scenario:
    s: np.ndarray
    n: np.ndarray
    x: np.ndarray
    x_prime: np.ndarray
    d: np.ndarray
    y: np.ndarray
    gains: dict
    meta: dict


def apply_nonlinearity(x, kind, eta=1.0):
    """Loudspeaker distortion model.

    "erfc": x' = erfc(eta * x) / eta.  "scale": samples below zero are
    multiplied by the linear gain of ``eta`` dB (eta <= 0 dB), positive
    samples pass unchanged.  "none": identity.
    """
    x = np.asarray(x, dtype=np.float64)
    if kind == "none":
        return x.copy()
    if kind == "erfc":
        if eta == 0:
            raise ValueError("erfc nonlinearity needs eta != 0")
        return erfc(eta * x) / eta
    if kind == "scale":
        gain = 10.0 ** (eta / 20.0)
        out = x.copy()
        out[out < 0] *= gain
        return out
    raise ValueError(f"unknown nonlinearity kind {kind!r}")


def make_echo(x_prime, rir_a, rir_b=None, fade_start=None, fade_len=0):
    """Convolve with a (possibly time-varying) room impulse response.

    Without a second RIR the convolution is static.  With one, the
    output blends linearly from the rir_a convolution to the rir_b
    convolution over ``fade_len`` samples starting at ``fade_start``.
    """
    x = np.asarray(x_prime, dtype=np.float64)
    rir_a = np.asarray(rir_a, dtype=np.float64)
    if rir_a.size == 0:
        raise ValueError("empty RIR")
    ca = sps.fftconvolve(x, rir_a)[:x.shape[0]]
    if rir_b is None:
        return ca
    rir_b = np.asarray(rir_b, dtype=np.float64)
    if rir_b.size == 0:
        raise ValueError("empty RIR")
    cb = sps.fftconvolve(x, rir_b)[:x.shape[0]]
    w = np.zeros(x.shape[0])
    if fade_start is None:
        fade_start = 0
    ramp_end = min(fade_start + max(fade_len, 1), x.shape[0])
    if fade_len > 0:
        ramp = np.linspace(0.0, 1.0, fade_len, endpoint=False)
        w[fade_start:ramp_end] = ramp[:ramp_end - fade_start]
    w[ramp_end:] = 1.0
    return (1.0 - w) * ca + w * cb


def active_energy(x, gate_db=ACTIVITY_GATE_DBFS, frame=_GATE_FRAME):
    """Energy over active frames and their sample count.

    A frame is active when its mean power is within ``gate_db`` of the
    clip's loudest frame; the relative gate makes the active set (and so
    the measured ratios) invariant to the mixing gains.
    """
    x = np.asarray(x, dtype=np.float64)
    n_frames = x.shape[0] // frame
    if n_frames == 0:
        return float(np.sum(x ** 2)), x.shape[0]
    head = x[:n_frames * frame].reshape(n_frames, frame)
    p = np.mean(head ** 2, axis=1)
    active = p > np.max(p) * 10.0 ** (gate_db / 10.0)
    if not np.any(active):
        return 0.0, 0
    n_active = int(np.sum(active)) * frame
    return float(np.sum(head[active] ** 2)), n_active


def _ratio_gain(ref_energy, ref_n, comp, target_db):
    """Gain g so that 10*log10(E_ref / E_{g*comp}) == target_db over
    active regions (per-sample energies)."""
    ce, cn = active_energy(comp)
    if ce == 0.0:
        raise ValueError("component has zero active energy, cannot satisfy target ratio")
    ref_pw = ref_energy / max(ref_n, 1)
    comp_pw = ce / cn
    return math.sqrt(ref_pw / comp_pw * 10.0 ** (-target_db / 10.0))


def mix(s, n, d, snr_db, ser_db):
    """Scale noise and echo against the nearend speech and sum.

    Returns (y, {"noise": g_n, "echo": g_d}); gains satisfy the active
    region energy ratios exactly.
    """
    s = np.asarray(s, dtype=np.float64)
    se, sn_cnt = active_energy(s)
    if se == 0.0:
        raise ValueError("silent nearend cannot satisfy a finite SNR/SER target")
    g_n = _ratio_gain(se, sn_cnt, n, snr_db)
    g_d = _ratio_gain(se, sn_cnt, d, ser_db)
    y = s + g_n * np.asarray(n, dtype=np.float64) + g_d * np.asarray(d, dtype=np.float64)
    return y, {"noise": g_n, "echo": g_d}


def apply_clock_drift(x, drift, half_width=32, kaiser_beta=8.5):
    """Resample by (1 + drift) with a windowed-sinc interpolator."""
    x = np.asarray(x, dtype=np.float64)
    if abs(drift) > 0.01:
        raise ValueError("clock drift limited to 1%")
    if drift == 0.0:
        return x.copy()
    out_len = int(round(x.shape[0] / (1.0 + drift)))
    out = np.empty(out_len)
    kernels.sinc_resample(x, 1.0 + drift, half_width, kaiser_beta, out)
    return out


def random_bandpass(x, rng, fs):
    """4th-order Butterworth bandpass with random speech-preserving edges."""
    low = rng.uniform(50.0, 200.0)
    high = rng.uniform(5000.0, min(7600.0, 0.95 * fs / 2))
    sos = sps.butter(4, [low, high], btype="bandpass", fs=fs, output="sos")
    return sps.sosfilt(sos, x), (low, high)


def synth_speech_like(rng, n_samples, fs):
    """Harmonic bursts with pauses; stands in for speech material."""
    out = np.zeros(n_samples)
    pos = int(rng.uniform(0, 0.2 * fs))
    while pos < n_samples:
        dur = int(rng.uniform(0.08, 0.35) * fs)
        seg = min(dur, n_samples - pos)
        t = np.arange(seg) / fs
        f0 = rng.uniform(90.0, 260.0) * (1.0 + 0.05 * np.sin(2 * np.pi * rng.uniform(1, 4) * t))
        phase = 2 * np.pi * np.cumsum(f0) / fs
        burst = np.zeros(seg)
        for h in range(1, int(rng.integers(6, 16))):
            if h * np.mean(f0) > 0.45 * fs:
                break
            burst += np.cos(h * phase + rng.uniform(0, 2 * np.pi)) / h
        if rng.random() < 0.3:  # fricative-like component
            burst += 0.3 * rng.standard_normal(seg)
        env = np.hanning(max(seg, 2))[:seg]
        out[pos:pos + seg] = 0.15 * env * burst / max(np.max(np.abs(burst)), 1e-9)
        pos += seg + int(rng.uniform(0.05, 0.3) * fs)
    return out


def synth_noise_like(rng, n_samples, fs):
    """Colored stationary noise with occasional level bumps."""
    w = rng.standard_normal(n_samples)
    pole = rng.uniform(0.8, 0.97)
    colored = sps.lfilter([1.0 - pole], [1.0, -pole], w)
    env = np.ones(n_samples)
    for _ in range(int(rng.integers(0, 4))):
        start = int(rng.uniform(0, n_samples))
        length = int(rng.uniform(0.1, 1.0) * fs)
        env[start:start + length] *= rng.uniform(1.5, 3.0)
    out = colored * env
    return 0.05 * out / max(np.std(out), 1e-9)


def synth_rir(rng, fs, rt60=None, length_s=0.25):
    """Decaying-noise RIR with a distinct direct path (synthetic stand-in)."""
    n = int(length_s * fs)
    rt60 = rt60 or rng.uniform(0.1, 0.4)
    delay = int(rng.uniform(0.002, 0.02) * fs)
    h = np.zeros(n)
    tail = rng.standard_normal(n - delay) * np.exp(
        -3.0 * np.log(10) * np.arange(n - delay) / (rt60 * fs))
    h[delay] = 1.0
    h[delay:] += 0.4 * tail
    return h / np.max(np.abs(h))


def _insert_silence(x, rng, fs, max_s):
    length = int(rng.uniform(0.0, min(max_s, len(x) / fs)) * fs)
    if length == 0:
        return x
    start = int(rng.uniform(0, max(1, len(x) - length)))
    out = x.copy()
    out[start:start + length] = 0.0
    return out


def _load_random_wav(rng, directory, n_samples, fs):
    files = sorted(f for f in os.listdir(directory) if f.lower().endswith(".wav"))
    if not files:
        raise ValueError(f"no wav files in {directory}")
    x, rate = wavio.read_wav(os.path.join(directory, str(files[rng.integers(len(files))])))
    if rate != fs:
        raise ValueError(f"corpus sample rate {rate} != {fs}")
    if len(x) >= n_samples:
        start = int(rng.integers(0, len(x) - n_samples + 1))
        return x[start:start + n_samples]
    reps = int(np.ceil(n_samples / len(x)))
    return np.tile(x, reps)[:n_samples]


def _direct_path_scaled(rir, gain, fs):
    """Scale the direct-path segment (first 5 ms after the peak) of a RIR."""
    out = rir.copy()
    peak = int(np.argmax(np.abs(out)))
    seg = slice(max(0, peak - 8), min(len(out), peak + int(0.005 * fs)))
    out[seg] *= gain
    return out


def generate(spec):
    """Build one scenario deterministically from the seed."""
    rng = np.random.default_rng(spec.seed)
    fs = spec.sample_rate
    n_total = int(round(spec.duration * fs))
    meta = {"seed": spec.seed, "condition": spec.condition,
            "duration": spec.duration, "sample_rate": fs}

    def source(kind):
        if spec.source_dir:
            sub = os.path.join(spec.source_dir, kind)
            directory = sub if os.path.isdir(sub) else spec.source_dir
            return _load_random_wav(rng, directory, n_total, fs)
        if kind == "noise":
            return synth_noise_like(rng, n_total, fs)
        return synth_speech_like(rng, n_total, fs)

    s = source("speech")
    n = source("noise")
    x = source("speech")

    if spec.condition == "stfe":
        s = np.zeros(n_total)
    if spec.condition == "stne":
        x = np.zeros(n_total)

    s = _insert_silence(s, rng, fs, spec.silence_max)
    n_sig = _insert_silence(n, rng, fs, spec.silence_max)
    x = _insert_silence(x, rng, fs, spec.silence_max)

    # playback path: clock drift, loudspeaker nonlinearity, room
    drift = spec.clock_drift if spec.clock_drift is not None else float(rng.uniform(-0.01, 0.01))
    x_play = apply_clock_drift(x, drift)
    if len(x_play) < n_total:
        x_play = np.concatenate([x_play, np.zeros(n_total - len(x_play))])
    x_play = x_play[:n_total]

    kind = spec.nonlinearity
    eta = spec.nl_eta
    if kind is None:
        if rng.random() < 0.8:
            kind = "erfc" if rng.random() < 0.5 else "scale"
        else:
            kind = "none"
    if eta is None:
        eta = 1.0 if kind == "erfc" else float(rng.uniform(-12.0, 0.0))
    x_prime = apply_nonlinearity(x_play, kind, eta)
    if kind == "erfc" and spec.remove_nl_dc:
        x_prime = x_prime - np.mean(x_prime)
    meta.update(clock_drift=drift, nonlinearity=kind, nl_eta=eta)

    rir_a = spec.rir_a if spec.rir_a is not None else synth_rir(rng, fs)
    if spec.crossfade:
        rir_b = spec.rir_b if spec.rir_b is not None else synth_rir(rng, fs)
        gain_b = abs(float(rng.normal(1.0, spec.rir_gain_std)))
        rir_b = _direct_path_scaled(rir_b, gain_b, fs)
        fade_len = int(spec.crossfade_interval * fs)
        fade_start = int(rng.uniform(0.2, 0.7) * n_total)
        d = make_echo(x_prime, rir_a, rir_b, fade_start, fade_len)
        meta.update(crossfade=True, rir_gain=gain_b, fade_start=fade_start,
                    fade_len=fade_len)
    else:
        d = make_echo(x_prime, rir_a)
        meta.update(crossfade=False)

    if spec.bandpass:
        s, edges_s = random_bandpass(s, rng, fs)
        n_sig, edges_n = random_bandpass(n_sig, rng, fs)
        d, edges_d = random_bandpass(d, rng, fs)
        meta.update(bandpass_s=edges_s, bandpass_n=edges_n, bandpass_d=edges_d)

    snr = spec.snr_db if spec.snr_db is not None else float(rng.uniform(0.0, 30.0))
    ser = spec.ser_db if spec.ser_db is not None else float(rng.uniform(-30.0, 10.0))
    gains = {"noise": 1.0, "echo": 1.0}
    if spec.condition == "stne":
        d = np.zeros(n_total)
        se, sc = active_energy(s)
        if se > 0:
            gains["noise"] = _ratio_gain(se, sc, n_sig, snr)
    elif spec.condition == "stfe":
        # no nearend: noise is scaled against the echo instead
        de, dc = active_energy(d)
        if de > 0:
            gains["noise"] = _ratio_gain(de, dc, n_sig, snr)
    else:
        _, gains = mix(s, n_sig, d, snr, ser)
    meta.update(snr_db=snr, ser_db=ser,
                gain_noise=gains["noise"], gain_echo=gains["echo"])

    n_sig = gains["noise"] * n_sig
    d = gains["echo"] * d
    y = s + n_sig + d
    return Scenario(s=s, n=n_sig, x=x, x_prime=x_prime, d=d, y=y,
                    gains=gains, meta=meta)


_BUNDLE_FILES = ("s", "n", "x", "x_prime", "d", "y")


def write_bundle(directory, scenario):
    """Scenario bundle: one 32-bit float WAV per component plus meta.txt."""
    os.makedirs(directory, exist_ok=True)
    fs = scenario.meta["sample_rate"]
    for name in _BUNDLE_FILES:
        wavio.write_wav(os.path.join(directory, f"{name}.wav"),
                        getattr(scenario, name), fs)
    with open(os.path.join(directory, "meta.txt"), "w") as f:
        for k, v in scenario.meta.items():
            f.write(f"{k} = {v}\n")


def read_bundle(directory):
    comps = {}
    fs = None
    for name in _BUNDLE_FILES:
        comps[name], rate = wavio.read_wav(os.path.join(directory, f"{name}.wav"))
        fs = fs or rate
        if rate != fs:
            raise ValueError("inconsistent sample rates in bundle")
    meta = {"sample_rate": fs}
    meta_path = os.path.join(directory, "meta.txt")
    if os.path.exists(meta_path):
        with open(meta_path) as f:
            for line in f:
                k, _, v = line.partition("=")
                meta[k.strip()] = v.strip()
    gains = {"noise": float(meta.get("gain_noise", 1.0)),
             "echo": float(meta.get("gain_echo", 1.0))}
    return Scenario(gains=gains, meta=meta, **comps)
