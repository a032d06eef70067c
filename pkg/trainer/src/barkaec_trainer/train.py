"""Adam training loop with a plateau learning-rate schedule."""

from dataclasses import dataclass

import numpy as np
import torch

from barkaec_trainer import data, dsp, loss
from barkaec_trainer.model import MaskNet, default_layers, save_engine_weights


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    lr_drop: float = 0.5
    patience: int = 10          # epochs without improvement before one drop
    epochs: int = 50
    alpha: float = 0.3
    num_bands: int = 86
    gru_width: int = 312
    fc_width: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning rate must be >= 0 (0 freezes the model)")
        if not 0 < self.lr_drop < 1:
            raise ValueError("lr_drop must be in (0, 1)")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must be in (0, 1)")


class PlateauSchedule:
    """Halve (by ``drop``) after ``patience`` consecutive non-improving
    epochs, exactly once per patience window (the counter resets on drop)."""

    def __init__(self, lr, drop=0.5, patience=10):
        self.lr = lr
        self.drop = drop
        self.patience = patience
        self.best = float("inf")
        self.stale = 0

    def step(self, val_loss):
        if val_loss < self.best:
            self.best = val_loss
            self.stale = 0
        else:
            self.stale += 1
            if self.stale >= self.patience:
                self.lr *= self.drop
                self.stale = 0
        return self.lr


def prepare_batch(clips, num_bands):
    """Precompute model inputs/targets for a clip list.

    Returns (feats (T, batch, 3B), e_frames (batch, T, bins),
    s_frames (batch, T, bins)); clips are truncated to the shortest
    frame count so they batch.
    """
    bark_mat = dsp.bark_matrix(num_bands=num_bands)
    feats, e_frames, s_frames = [], [], []
    for clip in clips:
        ef = dsp.stft_analyze(torch.from_numpy(clip["e"]))
        yf = dsp.stft_analyze(torch.from_numpy(clip["y"]))
        xf = dsp.stft_analyze(torch.from_numpy(clip["x"]))
        sf = dsp.stft_analyze(torch.from_numpy(clip["s"]))
        f = torch.cat([dsp.log_bark_features(g, bark_mat) for g in (ef, yf, xf)],
                      dim=-1)
        feats.append(f)
        e_frames.append(ef)
        s_frames.append(sf)
    t_min = min(f.shape[0] for f in feats)
    feats = torch.stack([f[:t_min] for f in feats], dim=1).to(torch.float32)
    e_frames = torch.stack([e[:t_min] for e in e_frames], dim=0)
    s_frames = torch.stack([s[:t_min] for s in s_frames], dim=0)
    return feats, e_frames, s_frames, bark_mat


def forward_loss(model, feats, e_frames, s_frames, bark_mat, alpha=0.3):
    """Full differentiable objective for one batch."""
    band_masks = model(feats)                      # (T, batch, B)
    bin_masks = band_masks.to(torch.float64) @ bark_mat.T.to(torch.float64)
    shat = e_frames * bin_masks.permute(1, 0, 2)   # (batch, T, bins)
    shat = loss.consistent_frames(shat)
    ref = loss.consistent_frames(s_frames)
    return loss.ccmse(shat, ref, alpha=alpha, normalized=True)


def train(dataset_dir, cfg=TrainConfig(), weights_out=None, curve_out=None,
          engine_cmd="barkaec", val_fraction=0.0):
    """Train a MaskNet on a directory of scenario bundles.

    Returns (model, loss curve as a list of floats).  Aborts with
    :class:`TrainingDiverged` if the loss goes non-finite.
    """
    torch.manual_seed(cfg.seed)
    clips = data.load_dataset(dataset_dir, engine_cmd)
    n_val = int(len(clips) * val_fraction)
    val_clips = clips[:n_val]
    train_clips = clips[n_val:]
    if not train_clips:
        raise ValueError("no training clips after the validation split")

    feats, e_frames, s_frames, bark_mat = prepare_batch(train_clips, cfg.num_bands)
    if val_clips:
        val_batch = prepare_batch(val_clips, cfg.num_bands)

    model = MaskNet(default_layers(cfg.num_bands, cfg.gru_width, cfg.fc_width),
                    num_bands=cfg.num_bands)
    opt = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    sched = PlateauSchedule(cfg.learning_rate, cfg.lr_drop, cfg.patience)

    curve = []
    for epoch in range(cfg.epochs):
        opt.zero_grad()
        j = forward_loss(model, feats, e_frames, s_frames, bark_mat, cfg.alpha)
        if not torch.isfinite(j):
            raise TrainingDiverged(
                f"non-finite loss at epoch {epoch}: {float(j.detach())!r}")
        if cfg.learning_rate > 0:
            j.backward()
            opt.step()
        curve.append(float(j.detach()))

        if val_clips:
            with torch.no_grad():
                val = float(forward_loss(model, *val_batch, cfg.alpha))
        else:
            val = curve[-1]
        lr = sched.step(val)
        for group in opt.param_groups:
            group["lr"] = lr

    if weights_out:
        save_engine_weights(model, weights_out)
    if curve_out:
        with open(curve_out, "w") as f:
            f.write("# epoch loss\n")
            for i, v in enumerate(curve):
                f.write(f"{i} {v:.10e}\n")
    return model, curve
