"""Torch replica of the engine's mask network and its weights format.

GRU convention ``single-bias-zrn-reset-on-recurrent``: gate order
(z, r, n), one combined bias per gate, reset gate applied to the
recurrent product only:

    z = sigmoid(Wz x + Uz h + bz)
    r = sigmoid(Wr x + Ur h + br)
    n = tanh(Wn x + r * (Un h) + bn)
    h' = (1 - z) * n + z * h

Weights file: ASCII header (magic line, manifest lines, END line)
followed by raw little-endian float32 tensors in manifest order (fc:
kernel row-major then bias; gru: input weights, recurrent weights,
bias).
"""

import math

import numpy as np
import torch
from torch import nn

MAGIC_LINE = "BARKAEC-WEIGHTS v1"
GRU_CONVENTION = "single-bias-zrn-reset-on-recurrent"


def default_layers(num_bands=86, gru_width=312, fc_width=500):
    """Manifest of the shipped engine stack: (kind, in, out, activation)."""
    g, f = gru_width, fc_width
    return (
        ("fc", 3 * num_bands, g, "relu"),
        ("gru", g, g, "linear"),
        ("gru", g, g, "linear"),
        ("fc", g, f, "relu"),
        ("fc", f, f, "relu"),
        ("fc", f, num_bands, "sigmoid"),
    )


class _Fc(nn.Module):
    def __init__(self, in_dim, out_dim, activation):
        super().__init__()
        self.activation = activation
        bound = math.sqrt(6.0 / (in_dim + out_dim))
        self.weight = nn.Parameter(torch.empty(out_dim, in_dim).uniform_(-bound, bound))
        self.bias = nn.Parameter(torch.zeros(out_dim))

    def forward(self, x):
        y = x @ self.weight.T + self.bias
        if self.activation == "relu":
            return torch.relu(y)
        if self.activation == "sigmoid":
            return torch.sigmoid(y)
        return y


class _Gru(nn.Module):
    def __init__(self, in_dim, hidden):
        super().__init__()
        self.hidden = hidden
        bound = math.sqrt(6.0 / (in_dim + hidden))
        self.wi = nn.Parameter(torch.empty(3 * hidden, in_dim).uniform_(-bound, bound))
        self.wr = nn.Parameter(torch.empty(3 * hidden, hidden).uniform_(-bound, bound))
        self.bias = nn.Parameter(torch.zeros(3 * hidden))

    def forward(self, x, h):
        hs = self.hidden
        gi = x @ self.wi.T
        gr = h @ self.wr.T
        z = torch.sigmoid(gi[..., :hs] + gr[..., :hs] + self.bias[:hs])
        r = torch.sigmoid(gi[..., hs:2 * hs] + gr[..., hs:2 * hs] + self.bias[hs:2 * hs])
        n = torch.tanh(gi[..., 2 * hs:] + r * gr[..., 2 * hs:] + self.bias[2 * hs:])
        return (1.0 - z) * n + z * h


class MaskNet(nn.Module):
    """Sequence model: log-Bark feature triples in, band masks in (0, 1) out."""

    def __init__(self, layers=None, num_bands=86, num_bins=257):
        super().__init__()
        if layers is None:
            layers = default_layers(num_bands)
        self.manifest = tuple(tuple(l) for l in layers)
        self.num_bands = num_bands
        self.num_bins = num_bins
        if self.manifest[0][1] != 3 * num_bands:
            raise ValueError("first layer must consume the concatenated features")
        if self.manifest[-1][2] != num_bands or self.manifest[-1][3] != "sigmoid":
            raise ValueError("output layer must be a sigmoid of width num_bands")
        mods = []
        for kind, in_dim, out_dim, act in self.manifest:
            if kind == "fc":
                mods.append(_Fc(in_dim, out_dim, act))
            elif kind == "gru":
                mods.append(_Gru(in_dim, out_dim))
            else:
                raise ValueError(f"unknown layer kind {kind!r}")
        self.stack = nn.ModuleList(mods)

    def forward(self, feats):
        """feats: (T, batch, 3B) -> band masks (T, batch, B)."""
        batch = feats.shape[1]
        hidden = [feats.new_zeros(batch, m.hidden)
                  for m in self.stack if isinstance(m, _Gru)]
        outs = []
        for t in range(feats.shape[0]):
            v = feats[t]
            gi = 0
            for mod in self.stack:
                if isinstance(mod, _Gru):
                    v = mod(v, hidden[gi])
                    hidden[gi] = v
                    gi += 1
                else:
                    v = mod(v)
            outs.append(v)
        return torch.stack(outs, dim=0)


def save_engine_weights(model, path):
    """Write the model in the engine's weights file format."""
    lines = [MAGIC_LINE,
             f"gru_convention = {GRU_CONVENTION}",
             f"num_bands = {model.num_bands}",
             f"num_bins = {model.num_bins}"]
    for kind, in_dim, out_dim, act in model.manifest:
        lines.append(f"layer = {kind} {in_dim} {out_dim} {act}")
    lines.append("END")
    with open(path, "wb") as f:
        f.write(("\n".join(lines) + "\n").encode("ascii"))
        for mod in model.stack:
            tensors = ((mod.wi, mod.wr, mod.bias) if isinstance(mod, _Gru)
                       else (mod.weight, mod.bias))
            for t in tensors:
                f.write(t.detach().cpu().numpy().astype("<f4").tobytes())


def load_engine_weights(path):
    """Read an engine weights file back into a MaskNet."""
    with open(path, "rb") as f:
        data = f.read()
    end = data.find(b"END\n")
    if end < 0 or not data.startswith(MAGIC_LINE.encode("ascii")):
        raise ValueError("not a barkaec weights file")
    blob = data[end + 4:]
    fields, layers = {}, []
    for line in data[:end].decode("ascii").splitlines()[1:]:
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key == "layer":
            kind, in_dim, out_dim, act = value.split()
            layers.append((kind, int(in_dim), int(out_dim), act))
        else:
            fields[key] = value
    if fields.get("gru_convention") != GRU_CONVENTION:
        raise ValueError(f"unsupported gru convention {fields.get('gru_convention')!r}")
    model = MaskNet(layers, num_bands=int(fields["num_bands"]),
                    num_bins=int(fields.get("num_bins", 0)))

    off = 0

    def take(shape):
        nonlocal off
        n = int(np.prod(shape))
        if off + 4 * n > len(blob):
            raise ValueError("truncated weights file")
        arr = np.frombuffer(blob, dtype="<f4", count=n, offset=off).reshape(shape)
        off += 4 * n
        return torch.from_numpy(arr.copy())

    with torch.no_grad():
        for mod, (kind, in_dim, out_dim, _) in zip(model.stack, model.manifest):
            if kind == "fc":
                mod.weight.copy_(take((out_dim, in_dim)))
                mod.bias.copy_(take((out_dim,)))
            else:
                mod.wi.copy_(take((3 * out_dim, in_dim)))
                mod.wr.copy_(take((3 * out_dim, out_dim)))
                mod.bias.copy_(take((3 * out_dim,)))
    if off != len(blob):
        raise ValueError("trailing bytes in weights file")
    return model
