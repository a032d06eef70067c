"""Acceptance gate: one test (and one printed PASS/FAIL line) per criterion.

Run with ``pytest -v tests/test_acceptance.py`` for the per-criterion
verdicts; printed lines carry the measured numbers.

Known red: the CCMSE unit-value criterion pins the opposite-phase
single-bin case to J = 1.0 at alpha = 0.5, but the loss formula
evaluates that case to 2.0 (see the magnitude/phase term expansion in
tests/test_loss.py).  The implementation follows the formula, so the
criterion fails by that factor of two; it is asserted as specified
rather than adjusted to pass.
"""

import time

import numpy as np
import pytest
from scipy.special import expit

from barkaec import bark, framing, postfilter, subband
from barkaec.lec import LecConfig, lec_init, lec_run
from barkaec.loss import LossConfig, ccmse
from barkaec.metrics import erle
from barkaec.pipeline import (OracleIrmProvider, PipelineConfig, lec_only,
                              process_stream)
from barkaec.scenario import ScenarioSpec, generate


def _report(name, ok, detail=""):
    line = f"[PRIMARY] {name}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" ({detail})"
    print(line, flush=True)
    assert ok, line


@pytest.fixture(scope="module")
def pcfg(proto):
    return PipelineConfig(proto=proto, mask_mode="unity")


def test_stft_round_trip(rng, stft_cfg):
    t0 = time.perf_counter()
    x = rng.standard_normal(16000)
    xr = framing.synthesize(framing.analyze(x, stft_cfg), stft_cfg)[:16000]
    sl = slice(stft_cfg.frame_len, 16000 - stft_cfg.frame_len)
    err = np.linalg.norm(xr[sl] - x[sl]) / np.linalg.norm(x[sl])
    elapsed = time.perf_counter() - t0
    _report("stft-round-trip", err <= 1e-6 and elapsed < 1.0,
            f"rel_l2={err:.2e}, time={elapsed:.3f}s")


def test_filterbank(rng):
    t0 = time.perf_counter()
    proto = subband.design_prototype()
    x = rng.standard_normal(16000)
    xr = subband.fb_synthesize(subband.fb_analyze(x, proto), proto)[:16000]
    sl = slice(proto.filter_len, 16000 - proto.filter_len)
    rt_db = 20 * np.log10(np.linalg.norm(xr[sl] - x[sl]) / np.linalg.norm(x[sl]))

    fs, lp = 16000, proto.filter_len
    t = np.arange(4 * lp) / fs
    leak_db = -np.inf
    for k_tone in (10, 64, 128, 200):
        tone = np.cos(2 * np.pi * k_tone * fs / proto.num_subbands * t)
        mag = np.mean(np.abs(subband.fb_analyze(tone, proto)[4:-4]) ** 2, axis=0)
        far = np.ones(proto.num_streams, dtype=bool)
        far[max(0, k_tone - 2):k_tone + 3] = False
        leak_db = max(leak_db, 10 * np.log10(np.max(mag[far]) / np.max(mag)))
    elapsed = time.perf_counter() - t0
    _report("filterbank", rt_db <= -40.0 and leak_db <= -40.0 and elapsed < 10.0,
            f"round_trip={rt_db:.1f}dB, leakage={leak_db:.1f}dB, time={elapsed:.1f}s")


def test_bark_map(rng):
    bmap = bark.build_bark_map(512, 86, 16000)
    sums = bmap.matrix.sum(axis=1)
    full_err = np.max(np.abs(sums[1:-1] - 1.0))
    dc = bmap.matrix[0, 0]
    # conservation over fully covered bins (DC/Nyquist carry weight 0.5
    # by construction, so they are excluded from the exact identity)
    p = rng.random(257)
    p[0] = p[-1] = 0.0
    cons = abs(np.sum(bark.pool_energy(bmap, p)) - np.sum(p)) / np.sum(p)
    _report("bark-map",
            full_err <= 1e-10 and cons <= 1e-10 and abs(dc - 0.5) <= 1e-10,
            f"bin_sum_err={full_err:.1e}, conservation={cons:.1e}, B(0,0)={dc:.3f}")


def test_lec_convergence(proto):
    rng = np.random.default_rng(777)
    fs, n = 16000, 10 * 16000
    x = rng.standard_normal(n)
    y = np.zeros(n)
    # delay+gain path, switched at t = 5 s
    y[64:5 * fs] = 0.5 * x[:5 * fs - 64]
    y[5 * fs:] = -0.8 * x[5 * fs - 100:n - 100]
    st = lec_init(LecConfig(), proto.num_streams)
    e_sub, _ = lec_run(st, subband.fb_analyze(x, proto),
                       subband.fb_analyze(y, proto))
    e = subband.fb_synthesize(e_sub, proto)[:n]

    final = erle(y[8 * fs:], e[8 * fs:])
    recov = erle(y[7 * fs:8 * fs], e[7 * fs:8 * fs])  # within 3 s of the change
    _report("lec-convergence", final >= 30.0 and recov >= 25.0,
            f"final_2s={final:.1f}dB, 3s_after_change={recov:.1f}dB")


def test_oracle_end_to_end(proto):
    improvements = []
    strictly_better = True
    for seed in range(20):
        spec = ScenarioSpec(duration=4.0, seed=1000 + seed, condition="stfe",
                            nonlinearity="erfc" if seed % 2 == 0 else "scale",
                            nl_eta=1.0 if seed % 2 == 0 else -6.0)
        sc = generate(spec)
        cfg = PipelineConfig(proto=proto, mask_mode="oracle")
        provider = OracleIrmProvider(sc.s, cfg)
        s_hat, _ = process_stream(sc.x, sc.y, cfg, mask_provider=provider)
        e = lec_only(sc.x, sc.y, cfg)
        erle_pipe = erle(sc.y, s_hat)
        erle_lec = erle(sc.y, e)
        strictly_better &= erle_pipe > erle_lec
        improvements.append(erle_pipe - erle_lec)
    med = float(np.median(improvements))
    _report("oracle-end-to-end", strictly_better and med >= 10.0,
            f"all_better={strictly_better}, median_improvement={med:.1f}dB")


def test_footprint_audit():
    arch = postfilter.default_arch()
    postfilter.audit_footprint(arch)  # warmup
    t0 = time.perf_counter()
    params, macs = postfilter.audit_footprint(arch)
    elapsed = time.perf_counter() - t0
    ok = (abs(params - 1.58e6) / 1.58e6 <= 0.10
          and abs(macs - 235e6) / 235e6 <= 0.10
          and elapsed < 1e-3)
    _report("footprint-audit", ok,
            f"params={params}, macs_per_s={macs}, time={elapsed * 1e6:.0f}us")


def test_rtf(proto):
    sc = generate(ScenarioSpec(duration=10.0, seed=42))
    rng = np.random.default_rng(0)
    weights = postfilter.random_weights(postfilter.default_arch(), rng)
    cfg = PipelineConfig(proto=proto, weights=weights, mask_mode="model")
    # jit warmup outside the timed run
    process_stream(sc.x[:16000], sc.y[:16000], cfg)
    _, report = process_stream(sc.x, sc.y, cfg)
    _report("rtf", report.rtf < 0.1, f"rtf={report.rtf:.4f}")


def _independent_forward(weights, feats_seq):
    """Oracle reimplementation of the mask network (einsum/expit based)."""
    arch = weights.arch
    hidden = {i: np.zeros(l.out_dim)
              for i, l in enumerate(arch.layers) if l.kind == "gru"}
    outs = []
    for fe, fy, fx in feats_seq:
        v = np.concatenate([fe, fy, fx])
        for i, (layer, ts) in enumerate(zip(arch.layers, weights.tensors)):
            if layer.kind == "fc":
                v = np.einsum("ij,j->i", ts[0], v) + ts[1]
                if layer.activation == "relu":
                    v = np.where(v > 0.0, v, 0.0)
                elif layer.activation == "sigmoid":
                    v = expit(v)
            else:
                h = hidden[i]
                hs = h.shape[0]
                gi = np.einsum("ij,j->i", ts[0], v)
                gr = np.einsum("ij,j->i", ts[1], h)
                z = expit(gi[:hs] + gr[:hs] + ts[2][:hs])
                r = expit(gi[hs:2 * hs] + gr[hs:2 * hs] + ts[2][hs:2 * hs])
                nn = np.tanh(gi[2 * hs:] + r * gr[2 * hs:] + ts[2][2 * hs:])
                v = (1.0 - z) * nn + z * h
                hidden[i] = v
        outs.append(v)
    return np.array(outs)


def test_inference_parity():
    rng = np.random.default_rng(99)
    arch = postfilter.default_arch()
    weights = postfilter.random_weights(arch, rng)
    b = arch.num_bands
    feats_seq = [tuple(rng.standard_normal(b) for _ in range(3))
                 for _ in range(100)]
    state = postfilter.PostfilterState(arch)
    engine = np.array([postfilter.infer_mask(state, weights, *f)[0]
                       for f in feats_seq])
    oracle = _independent_forward(weights, feats_seq)
    diff = float(np.max(np.abs(engine - oracle)))
    _report("inference-parity", diff <= 1e-6, f"max_abs_diff={diff:.2e} over 100 cases")


def test_streaming_equivalence(pcfg):
    worst = 0
    identical = True
    for seed in range(10):
        sc = generate(ScenarioSpec(duration=1.5, seed=2000 + seed))
        whole, _ = process_stream(sc.x, sc.y, pcfg)
        chunked, _ = process_stream(sc.x, sc.y, pcfg, chunk=997)
        identical &= (whole.shape == chunked.shape
                      and bool(np.array_equal(whole, chunked)))
    _report("streaming-equivalence", identical,
            "10 clips, chunk=997 vs whole, bit-identical" if identical
            else "mismatch")


def test_error_decomposition_identity(pcfg, stft_cfg):
    # epsilon = S_hat - S must equal (M-1) S + M (N + dD) per bin, where
    # dD is the residual-echo spectrum E - S - N of the canceller output
    worst = 0.0
    for seed in (5, 6):
        sc = generate(ScenarioSpec(duration=2.0, seed=seed))
        cfg = PipelineConfig(proto=pcfg.proto, mask_mode="oracle")
        provider = OracleIrmProvider(sc.s, cfg)
        _, _, inter = process_stream(sc.x, sc.y, cfg, mask_provider=provider,
                                     capture=True)
        s_f = framing.analyze(sc.s, stft_cfg)
        n_f = framing.analyze(sc.n, stft_cfg)
        e_f = inter["e_frames"]
        m = inter["masks"]
        shat = inter["shat_frames"]
        nf = min(s_f.shape[0], e_f.shape[0])
        dd = e_f[:nf] - s_f[:nf] - n_f[:nf]
        eps = shat[:nf] - s_f[:nf]
        rhs = (m[:nf] - 1.0) * s_f[:nf] + m[:nf] * (n_f[:nf] + dd)
        scale = max(float(np.max(np.abs(s_f[:nf]))), 1.0)
        worst = max(worst, float(np.max(np.abs(eps - rhs))) / scale)
    _report("error-decomposition", worst <= 1e-9, f"max_per_bin={worst:.2e}")


def test_ccmse_unit_values(rng):
    s = rng.standard_normal((4, 257)) + 1j * rng.standard_normal((4, 257))
    j_self = ccmse(s, s)
    a = np.zeros((1, 257), dtype=complex)
    b = np.zeros((1, 257), dtype=complex)
    a[0, 0] = 1.0
    b[0, 0] = -1.0
    j_opp = ccmse(a, b, LossConfig(alpha=0.5))
    _report("ccmse-unit-values",
            j_self == 0.0 and j_opp == pytest.approx(1.0, rel=1e-9),
            f"J(S,S)={j_self}, opposite-phase J={j_opp} (pinned target 1.0)")
