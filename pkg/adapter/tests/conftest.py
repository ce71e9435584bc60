import pytest

from tiny_lm import build_tiny_lm


@pytest.fixture(scope="session")
def tiny_lm_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("models") / "tiny-lm"
    return str(build_tiny_lm(out, train_steps=300, seed=0))


@pytest.fixture(scope="session")
def scorer(tiny_lm_dir):
    from surprisuite_adapter import AdapterConfig, CausalScorer
    return CausalScorer(AdapterConfig(model=tiny_lm_dir, batch_size=4))
