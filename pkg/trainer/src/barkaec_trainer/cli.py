"""Command line entry point: barkaec-train."""

import sys

import click

from barkaec_trainer.train import TrainConfig, TrainingDiverged, train


@click.command()
@click.option("--data", "dataset_dir", required=True,
              type=click.Path(exists=True, file_okay=False),
              help="Directory of scenario bundle subdirectories.")
@click.option("--out", "weights_out", required=True, type=click.Path(),
              help="Output path for the engine-format weights file.")
@click.option("--curve", "curve_out", type=click.Path(),
              help="Optional plaintext loss-curve output.")
@click.option("--epochs", default=50, show_default=True)
@click.option("--lr", default=1e-4, show_default=True)
@click.option("--alpha", default=0.3, show_default=True)
@click.option("--gru-width", default=312, show_default=True)
@click.option("--fc-width", default=500, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--val-fraction", default=0.0, show_default=True,
              help="Fraction of clips held out for the lr schedule metric.")
@click.option("--engine-cmd", default="barkaec", show_default=True,
              help="Engine CLI used to produce missing e.wav files.")
def main(dataset_dir, weights_out, curve_out, epochs, lr, alpha, gru_width,
         fc_width, seed, val_fraction, engine_cmd):
    """Train the mask-estimating postfilter on scenario bundles."""
    cfg = TrainConfig(learning_rate=lr, epochs=epochs, alpha=alpha,
                      gru_width=gru_width, fc_width=fc_width, seed=seed)
    try:
        _, curve = train(dataset_dir, cfg, weights_out=weights_out,
                         curve_out=curve_out, engine_cmd=engine_cmd,
                         val_fraction=val_fraction)
    except (ValueError, TrainingDiverged) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)
    click.echo(f"epochs = {len(curve)}")
    click.echo(f"initial_loss = {curve[0]:.6e}")
    click.echo(f"final_loss = {curve[-1]:.6e}")
    click.echo(f"weights = {weights_out}")
