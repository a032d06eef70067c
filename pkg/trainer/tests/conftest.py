import numpy as np
import pytest
import torch


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(2024)


@pytest.fixture(autouse=True)
def _torch_seed():
    torch.manual_seed(0)


@pytest.fixture(scope="session")
def toy_dataset(tmp_path_factory):
    """Ten 1-second farend-only scenario bundles with e.wav prepared.

    Bundle generation and error-signal preparation go through the
    engine's external interfaces (scenario bundles + CLI).
    """
    from barkaec.scenario import ScenarioSpec, generate, write_bundle
    from barkaec_trainer.data import ensure_error_signal

    root = tmp_path_factory.mktemp("bundles")
    for i in range(10):
        sc = generate(ScenarioSpec(duration=1.0, seed=4000 + i,
                                   condition="stfe", nonlinearity="erfc",
                                   nl_eta=1.0))
        write_bundle(root / f"clip{i:02d}", sc)
        ensure_error_signal(str(root / f"clip{i:02d}"))
    return str(root)
