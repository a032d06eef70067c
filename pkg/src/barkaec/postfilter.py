"""Mask-estimating postfilter: FC/GRU stack, weights file, footprint audit.

The network consumes the concatenated log-Bark power features of the
canceller error, the microphone and the farend signal (3*B inputs) and
emits a band-domain mask in (0, 1) through a sigmoid output layer.

GRU convention (frozen in the weights manifest, id
``single-bias-zrn-reset-on-recurrent``): gate order (z, r, n), one
combined bias per gate, reset gate applied to the recurrent product only:

    z = sigmoid(Wz x + Uz h + bz)
    r = sigmoid(Wr x + Ur h + br)
    n = tanh(Wn x + r * (Un h) + bn)
    h' = (1 - z) * n + z * h

Weights file: text header (magic line, manifest) terminated by an END
line, followed by raw little-endian float32 tensors in manifest order
(per FC: kernel row-major then bias; per GRU: input weights, recurrent
weights, bias).  Round trips are bit exact.
"""

import io
from dataclasses import dataclass, field

import numpy as np

from barkaec.backend import kernels
from barkaec import _kernels_np

_MAGIC_LINE = "BARKAEC-WEIGHTS v1"
GRU_CONVENTION = "single-bias-zrn-reset-on-recurrent"

_ACT_IDS = {"linear": _kernels_np.ACT_LINEAR, "relu": _kernels_np.ACT_RELU,
            "sigmoid": _kernels_np.ACT_SIGMOID}


@dataclass(frozen=True)
class Layer:
    kind: str        # "fc" | "gru"
    in_dim: int
    out_dim: int
    activation: str  # fc only: "linear" | "relu" | "sigmoid"; gru: "linear"

    def __post_init__(self):
        if self.kind not in ("fc", "gru"):
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.kind == "fc" and self.activation not in _ACT_IDS:
            raise ValueError(f"unknown activation {self.activation!r}")


@dataclass(frozen=True)
class ModelArch:
    layers: tuple
    num_bands: int = 86
    num_bins: int = 257  # 0 disables the fixed band-mapping term in the audit

    def __post_init__(self):
        if self.layers:
            if self.layers[0].in_dim != self.input_dim:
                raise ValueError("first layer must consume the concatenated features")
            for a, b in zip(self.layers, self.layers[1:]):
                if a.out_dim != b.in_dim:
                    raise ValueError("layer widths do not chain")
            if self.layers[-1].out_dim != self.num_bands:
                raise ValueError("output width must equal the band count")
            if self.layers[-1].activation != "sigmoid":
                raise ValueError("output activation must be sigmoid")

    @property
    def input_dim(self):
        return 3 * self.num_bands


def default_arch(num_bands=86, num_bins=257):
    """Shipped stack; widths chosen to land on the footprint targets
    (about 1.7M parameters, 223M MACs/s at 125 frames/s)."""
    g, f = 312, 500
    return ModelArch(layers=(
        Layer("fc", 3 * num_bands, g, "relu"),
        Layer("gru", g, g, "linear"),
        Layer("gru", g, g, "linear"),
        Layer("fc", g, f, "relu"),
        Layer("fc", f, f, "relu"),
        Layer("fc", f, num_bands, "sigmoid"),
    ), num_bands=num_bands, num_bins=num_bins)


@dataclass
class ModelWeights:
    arch: ModelArch
    tensors: list  # per layer: fc -> (kernel, bias); gru -> (wi, wr, bias)

    def validate(self):
        if len(self.tensors) != len(self.arch.layers):
            raise ValueError("tensor count does not match manifest")
        for layer, ts in zip(self.arch.layers, self.tensors):
            shapes = [t.shape for t in ts]
            if layer.kind == "fc":
                want = [(layer.out_dim, layer.in_dim), (layer.out_dim,)]
            else:
                h = layer.out_dim
                want = [(3 * h, layer.in_dim), (3 * h, h), (3 * h,)]
            if shapes != want:
                raise ValueError(f"tensor shapes {shapes} do not match manifest {want}")
            for t in ts:
                if not np.all(np.isfinite(t)):
                    raise ValueError("non-finite weight values")
        return self


def zero_weights(arch):
    tensors = []
    for layer in arch.layers:
        if layer.kind == "fc":
            tensors.append((np.zeros((layer.out_dim, layer.in_dim)),
                            np.zeros(layer.out_dim)))
        else:
            h = layer.out_dim
            tensors.append((np.zeros((3 * h, layer.in_dim)),
                            np.zeros((3 * h, h)), np.zeros(3 * h)))
    return ModelWeights(arch, tensors)


def random_weights(arch, rng, scale=None):
    """Glorot-style random initialization (float32 values, float64 storage)."""
    tensors = []
    for layer in arch.layers:
        s = scale or np.sqrt(2.0 / (layer.in_dim + layer.out_dim))
        if layer.kind == "fc":
            tensors.append((
                rng.normal(0.0, s, (layer.out_dim, layer.in_dim)).astype(np.float32).astype(np.float64),
                np.zeros(layer.out_dim)))
        else:
            h = layer.out_dim
            tensors.append((
                rng.normal(0.0, s, (3 * h, layer.in_dim)).astype(np.float32).astype(np.float64),
                rng.normal(0.0, s, (3 * h, h)).astype(np.float32).astype(np.float64),
                np.zeros(3 * h)))
    return ModelWeights(arch, tensors)


class PostfilterState:
    """Per-stream GRU hidden vectors, zero at stream start."""

    def __init__(self, arch):
        self.hidden = [np.zeros(l.out_dim) for l in arch.layers if l.kind == "gru"]

    def reset(self):
        for h in self.hidden:
            h[:] = 0.0
        return self


def infer_mask(state, weights, feat_e, feat_y, feat_x):
    """One forward step; returns (band mask in (0,1), state).

    ``state`` is mutated in place and returned for convenience.
    """
    arch = weights.arch
    b = arch.num_bands
    for name, feat in (("feat_e", feat_e), ("feat_y", feat_y), ("feat_x", feat_x)):
        if np.shape(feat) != (b,):
            raise ValueError(f"{name} must have shape ({b},)")
    x = np.concatenate([np.asarray(feat_e, dtype=np.float64),
                        np.asarray(feat_y, dtype=np.float64),
                        np.asarray(feat_x, dtype=np.float64)])
    gru_idx = 0
    for layer, ts in zip(arch.layers, weights.tensors):
        if layer.kind == "fc":
            x = kernels.fc_step(ts[0], ts[1], x, _ACT_IDS[layer.activation])
        else:
            h = kernels.gru_step(ts[0], ts[1], ts[2], x, state.hidden[gru_idx])
            state.hidden[gru_idx][:] = h
            x = h
            gru_idx += 1
    return x, state


def apply_mask(e_frame, bin_mask):
    """Spectral masking: S_hat(k) = M(k) * E(k), phase preserved."""
    e = np.asarray(e_frame)
    m = np.asarray(bin_mask, dtype=np.float64)
    if e.shape[-1] != m.shape[-1]:
        raise ValueError("mask / frame length mismatch")
    return e * m


def audit_footprint(arch, frame_rate=125.0):
    """Exact parameter and MACs/s arithmetic over the manifest.

    FC: params = in*out + out, MACs = in*out.  GRU (single-bias):
    params = 3*(in*h + h*h + h), MACs = 3*(in*h + h*h).  When the arch
    declares DFT bins, the fixed Bark mapping work (three pooled inputs
    plus the transpose un-mapping) is charged to MACs as well.
    """
    params = 0
    macs_per_frame = 0
    for layer in arch.layers:
        if layer.kind == "fc":
            params += layer.in_dim * layer.out_dim + layer.out_dim
            macs_per_frame += layer.in_dim * layer.out_dim
        else:
            h = layer.out_dim
            params += 3 * (layer.in_dim * h + h * h + h)
            macs_per_frame += 3 * (layer.in_dim * h + h * h)
    if arch.layers and arch.num_bins:
        macs_per_frame += 4 * arch.num_bins * arch.num_bands
    return params, int(round(macs_per_frame * frame_rate))


def save_weights(weights, path):
    weights.validate()
    arch = weights.arch
    with open(path, "wb") as f:
        hdr = io.StringIO()
        hdr.write(_MAGIC_LINE + "\n")
        hdr.write(f"gru_convention = {GRU_CONVENTION}\n")
        hdr.write(f"num_bands = {arch.num_bands}\n")
        hdr.write(f"num_bins = {arch.num_bins}\n")
        for layer in arch.layers:
            hdr.write(f"layer = {layer.kind} {layer.in_dim} {layer.out_dim} {layer.activation}\n")
        hdr.write("END\n")
        f.write(hdr.getvalue().encode("ascii"))
        for ts in weights.tensors:
            for t in ts:
                f.write(np.ascontiguousarray(t, dtype="<f4").tobytes())


def load_weights(path):
    with open(path, "rb") as f:
        data = f.read()
    end = data.find(b"END\n")
    if end < 0 or not data.startswith(_MAGIC_LINE.encode("ascii")):
        raise ValueError("not a barkaec weights file (bad magic or missing END)")
    header = data[:end].decode("ascii").splitlines()
    blob = data[end + 4:]

    fields = {}
    layers = []
    for line in header[1:]:
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key == "layer":
            kind, in_dim, out_dim, act = value.split()
            layers.append(Layer(kind, int(in_dim), int(out_dim), act))
        else:
            fields[key] = value
    if fields.get("gru_convention") != GRU_CONVENTION:
        raise ValueError(f"unsupported gru convention {fields.get('gru_convention')!r}")
    arch = ModelArch(layers=tuple(layers), num_bands=int(fields["num_bands"]),
                     num_bins=int(fields.get("num_bins", 0)))

    tensors = []
    off = 0

    def take(shape):
        nonlocal off
        n = int(np.prod(shape))
        if off + 4 * n > len(blob):
            raise ValueError("truncated weights file")
        arr = np.frombuffer(blob, dtype="<f4", count=n, offset=off)
        off += 4 * n
        return arr.reshape(shape).astype(np.float64)

    for layer in arch.layers:
        if layer.kind == "fc":
            tensors.append((take((layer.out_dim, layer.in_dim)), take((layer.out_dim,))))
        else:
            h = layer.out_dim
            tensors.append((take((3 * h, layer.in_dim)), take((3 * h, h)), take((3 * h,))))
    if off != len(blob):
        raise ValueError("trailing bytes in weights file")
    return ModelWeights(arch, tensors).validate()
