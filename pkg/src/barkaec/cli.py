"""Command line front end.

Subcommands are thin wrappers over the library: ``process`` runs the
full canceller+postfilter chain over WAV files, ``simulate`` writes
scenario bundles, ``evaluate`` scores a bundle, ``audit`` prints the
model footprint, ``design-fb`` designs and checks the filterbank
prototype, ``export-features`` dumps the network input features and
``bench`` times the numba kernels against the pure-numpy build.

Config files are flat ``key = value`` text; recognized keys are the
fields of StftConfig (``stft.*``), LecConfig (``lec.*``) and the
pipeline's ``num_bands`` / ``log_floor``.  Exit codes: 0 success,
2 input error (files, signals), 3 config error.
"""

import sys
import time

import click
import numpy as np

from barkaec import bark, metrics, postfilter, scenario, subband, wavio
from barkaec.backend import BACKEND_NAME, get_kernels
from barkaec.framing import StftConfig, analyze
from barkaec.lec import LecConfig
from barkaec.pipeline import (OracleIrmProvider, PipelineConfig, lec_only,
                              process_stream)

EXIT_INPUT = 2
EXIT_CONFIG = 3


def _fail(code, message):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _parse_config_file(path):
    values = {}
    try:
        with open(path) as f:
            for ln, line in enumerate(f, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                key, sep, value = line.partition("=")
                if not sep:
                    raise ValueError(f"line {ln}: expected 'key = value'")
                values[key.strip()] = value.strip()
    except OSError as exc:
        _fail(EXIT_INPUT, f"cannot read config file: {exc}")
    except ValueError as exc:
        _fail(EXIT_CONFIG, f"bad config file: {exc}")
    return values


def _coerce(raw, like):
    if isinstance(like, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(like, int):
        return int(raw)
    if isinstance(like, float):
        return float(raw)
    if isinstance(like, tuple):
        return tuple(int(v) for v in raw.split(","))
    return raw


def _build_pipeline_config(config_path, weights_path, mask_mode):
    values = _parse_config_file(config_path) if config_path else {}
    stft_kw, lec_kw, top_kw = {}, {}, {}
    defaults = {"stft": StftConfig(), "lec": LecConfig()}
    for key, raw in values.items():
        scope, _, name = key.partition(".")
        try:
            if scope in defaults and name:
                current = getattr(defaults[scope], name)
                (stft_kw if scope == "stft" else lec_kw)[name] = _coerce(raw, current)
            elif key == "num_bands":
                top_kw["num_bands"] = int(raw)
            elif key == "log_floor":
                top_kw["log_floor"] = float(raw)
            else:
                raise ValueError(f"unknown config key {key!r}")
        except (AttributeError, ValueError, TypeError) as exc:
            _fail(EXIT_CONFIG, f"config key {key!r}: {exc}")

    weights = None
    if weights_path:
        try:
            weights = postfilter.load_weights(weights_path)
        except (OSError, ValueError) as exc:
            _fail(EXIT_INPUT, f"cannot load weights: {exc}")
    try:
        return PipelineConfig(stft=StftConfig(**stft_kw), lec=LecConfig(**lec_kw),
                              weights=weights, mask_mode=mask_mode, **top_kw)
    except (ValueError, TypeError) as exc:
        _fail(EXIT_CONFIG, str(exc))


def _read_pair(farend, mic):
    try:
        x, rx = wavio.read_wav(farend)
        y, ry = wavio.read_wav(mic)
    except (OSError, ValueError) as exc:
        _fail(EXIT_INPUT, str(exc))
    if rx != ry:
        _fail(EXIT_INPUT, f"sample-rate mismatch: farend {rx} Hz vs mic {ry} Hz")
    return x, y, rx


def _write_report(report, path):
    text = "\n".join(report.lines()) + "\n"
    if path:
        with open(path, "w") as f:
            f.write(text)
    click.echo(text, nl=False)


@click.group()
def main():
    """Hybrid echo control: subband NLMS canceller + Bark postfilter."""


@main.command()
@click.option("--farend", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--mic", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--weights", type=click.Path(exists=True, dir_okay=False),
              help="Postfilter weights file; without it the mask is unity (LEC only).")
@click.option("--oracle-mask", type=click.Path(exists=True, dir_okay=False),
              help="Ground-truth nearend WAV; enables the IRM oracle instead of weights.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--report", "report_path", type=click.Path(dir_okay=False))
def process(farend, mic, out, weights, oracle_mask, config_path, report_path):
    """Process a farend/mic WAV pair into an enhanced output WAV."""
    if weights and oracle_mask:
        _fail(EXIT_CONFIG, "--weights and --oracle-mask are mutually exclusive")
    mode = "model" if weights else ("oracle" if oracle_mask else "unity")
    cfg = _build_pipeline_config(config_path, weights, mode)
    x, y, fs = _read_pair(farend, mic)
    if fs != cfg.stft.sample_rate:
        _fail(EXIT_INPUT, f"expected {cfg.stft.sample_rate} Hz input, got {fs} Hz")

    provider = None
    if oracle_mask:
        try:
            s_ref, rs = wavio.read_wav(oracle_mask)
        except (OSError, ValueError) as exc:
            _fail(EXIT_INPUT, str(exc))
        if rs != fs:
            _fail(EXIT_INPUT, "oracle reference sample rate mismatch")
        provider = OracleIrmProvider(s_ref, cfg)

    s_hat, report = process_stream(x, y, cfg, mask_provider=provider)
    wavio.write_wav(out, s_hat[:len(y)], fs)
    report.extra["mask_mode"] = mode
    report.extra["backend"] = BACKEND_NAME
    _write_report(report, report_path)


@main.command()
@click.option("--out", required=True, type=click.Path(file_okay=False),
              help="Bundle directory to create.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--condition", default="dt", show_default=True,
              type=click.Choice(["dt", "stfe", "stne"]))
@click.option("--duration", default=10.0, show_default=True, type=float)
@click.option("--source-dir", type=click.Path(exists=True, file_okay=False),
              help="WAV corpus; defaults to the built-in synthetic sources.")
def simulate(out, seed, condition, duration, source_dir):
    """Generate a synthetic scenario bundle (WAV components + meta.txt)."""
    try:
        spec = scenario.ScenarioSpec(seed=seed, condition=condition,
                                     duration=duration, source_dir=source_dir)
        sc = scenario.generate(spec)
    except ValueError as exc:
        _fail(EXIT_CONFIG, str(exc))
    scenario.write_bundle(out, sc)
    click.echo(f"wrote bundle to {out} (condition={condition}, seed={seed})")


@main.command()
@click.option("--bundle", required=True, type=click.Path(exists=True, file_okay=False),
              help="Scenario bundle directory from `simulate`.")
@click.option("--weights", type=click.Path(exists=True, dir_okay=False))
@click.option("--oracle-mask", is_flag=True,
              help="Use the bundle's ground-truth nearend as IRM oracle.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--report", "report_path", type=click.Path(dir_okay=False))
def evaluate(bundle, weights, oracle_mask, config_path, report_path):
    """Score a scenario bundle: pipeline vs LEC-only ERLE, RTF."""
    if weights and oracle_mask:
        _fail(EXIT_CONFIG, "--weights and --oracle-mask are mutually exclusive")
    mode = "model" if weights else ("oracle" if oracle_mask else "unity")
    cfg = _build_pipeline_config(config_path, weights, mode)
    try:
        sc = scenario.read_bundle(bundle)
    except (OSError, ValueError) as exc:
        _fail(EXIT_INPUT, str(exc))

    provider = OracleIrmProvider(sc.s, cfg) if oracle_mask else None
    s_hat, report = process_stream(sc.x, sc.y, cfg, mask_provider=provider)
    e = lec_only(sc.x, sc.y, cfg)
    report.condition = str(sc.meta.get("condition", ""))
    report.extra["erle_lec_only_db"] = f"{metrics.erle(sc.y, e):.4f}"
    report.extra["mask_mode"] = mode
    report.extra["backend"] = BACKEND_NAME
    _write_report(report, report_path)


@main.command()
@click.option("--weights", type=click.Path(exists=True, dir_okay=False),
              help="Audit a weights file's manifest instead of the default arch.")
@click.option("--frame-rate", default=125.0, show_default=True, type=float)
def audit(weights, frame_rate):
    """Print the exact parameter count and MACs/s of the postfilter."""
    if weights:
        try:
            arch = postfilter.load_weights(weights).arch
        except (OSError, ValueError) as exc:
            _fail(EXIT_INPUT, f"cannot load weights: {exc}")
    else:
        arch = postfilter.default_arch()
    params, macs = postfilter.audit_footprint(arch, frame_rate)
    click.echo(f"params = {params}")
    click.echo(f"macs_per_s = {macs}")
    for layer in arch.layers:
        click.echo(f"layer = {layer.kind} {layer.in_dim} {layer.out_dim} {layer.activation}")


@main.command("design-fb")
@click.option("--out", type=click.Path(dir_okay=False),
              help="Write the analysis prototype taps to this file.")
@click.option("--filter-len", default=1024, show_default=True, type=int)
@click.option("--num-subbands", default=512, show_default=True, type=int)
@click.option("--decimation", default=128, show_default=True, type=int)
def design_fb(out, filter_len, num_subbands, decimation):
    """Design the filterbank prototype and report its round-trip error."""
    try:
        proto = subband.design_prototype(filter_len, num_subbands, decimation)
    except ValueError as exc:
        _fail(EXIT_CONFIG, str(exc))
    rng = np.random.default_rng(0)
    x = rng.standard_normal(16000)
    xr = subband.fb_synthesize(subband.fb_analyze(x, proto), proto)[:x.shape[0]]
    interior = slice(proto.filter_len, x.shape[0] - proto.filter_len)
    err = np.linalg.norm(xr[interior] - x[interior]) / np.linalg.norm(x[interior])
    click.echo(f"round_trip_db = {20 * np.log10(max(err, 1e-300)):.2f}")
    click.echo(f"lookahead_samples = {proto.lookahead}")
    if out:
        subband.save_taps(out, proto.taps)
        click.echo(f"wrote taps to {out}")


@main.command("export-features")
@click.option("--farend", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--mic", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False),
              help="Output .npz with per-frame log-Bark features of E, Y, X.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
def export_features(farend, mic, out, config_path):
    """Dump the postfilter input features (canceller error, mic, farend)."""
    cfg = _build_pipeline_config(config_path, None, "unity")
    x, y, fs = _read_pair(farend, mic)
    if fs != cfg.stft.sample_rate:
        _fail(EXIT_INPUT, f"expected {cfg.stft.sample_rate} Hz input, got {fs} Hz")
    e = lec_only(x, y, cfg)
    bmap = bark.build_bark_map(cfg.stft.dft_size, cfg.num_bands, cfg.stft.sample_rate)
    feats = {}
    for name, sig in (("feat_e", e), ("feat_y", y), ("feat_x", x)):
        frames = analyze(sig[:len(y)], cfg.stft)
        pooled = bark.pool_energy(bmap, np.abs(frames) ** 2)
        feats[name] = bark.log_compress(pooled, cfg.log_floor)
    np.savez(out, **feats)
    click.echo(f"wrote {feats['feat_e'].shape[0]} frames x "
               f"{cfg.num_bands} bands per signal to {out}")


@main.command()
@click.option("--seconds", default=10.0, show_default=True, type=float,
              help="Amount of audio worth of kernel work to time.")
def bench(seconds):
    """Time the NLMS and GRU kernels: numba build vs pure numpy."""
    cfg = LecConfig()
    proto = subband.design_prototype()
    ks = proto.num_streams
    n_frames = int(seconds * cfg.sample_rate / cfg.decimation)
    rng = np.random.default_rng(0)
    xs = rng.standard_normal((n_frames, ks)) + 1j * rng.standard_normal((n_frames, ks))
    ys = rng.standard_normal((n_frames, ks)) + 1j * rng.standard_normal((n_frames, ks))
    arch = postfilter.default_arch()
    w = postfilter.random_weights(arch, rng)
    gru = next(ts for layer, ts in zip(arch.layers, w.tensors) if layer.kind == "gru")
    feat = rng.standard_normal(gru[0].shape[1])

    for name in ("numba", "numpy"):
        try:
            kern = get_kernels(name)
        except ImportError:
            click.echo(f"{name}: unavailable")
            continue
        taps = np.array(sorted(cfg.filter_lengths), dtype=np.int64)
        t_max = int(taps.max())
        xbuf = np.zeros((t_max, ks), dtype=np.complex128)
        coeffs = np.zeros((len(taps), t_max, ks), dtype=np.complex128)
        px, pref = np.zeros(ks), np.zeros(1)
        pe = np.zeros((len(taps), ks))
        pd = np.zeros((len(taps), ks))
        e_out = np.empty(ks, dtype=np.complex128)
        d_out = np.empty(ks, dtype=np.complex128)
        sel = np.zeros(ks, dtype=np.int64)

        def run_lec():
            for m in range(n_frames):
                kern.lec_frame(xs[m], ys[m], xbuf, coeffs, px, pe, pd, pref,
                               taps, cfg.step_size, cfg.step_floor * cfg.step_size,
                               cfg.regularization, cfg.update_gate,
                               cfg.smoothing_coeff, m == 0, e_out, d_out, sel)

        def run_gru():
            h = np.zeros(gru[1].shape[1])
            for _ in range(n_frames):
                h = kern.gru_step(gru[0], gru[1], gru[2], feat, h)

        for label, fn in (("lec_frame", run_lec), ("gru_step", run_gru)):
            fn()  # warm up (JIT compile for numba)
            t0 = time.perf_counter()
            fn()
            dt = time.perf_counter() - t0
            click.echo(f"{name:5s} {label}: {dt:.3f} s for {seconds:.0f} s audio "
                       f"(rtf {dt / seconds:.4f})")


if __name__ == "__main__":
    main()
