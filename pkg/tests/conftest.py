import numpy as np
import pytest

from exp2fscil import ProtocolConfig, SynthSpec, generate_dataset


def small_spec(seed=0, **kw):
    protocol = kw.pop("protocol", ProtocolConfig(10, 4, 3, 2, 3, 8))
    defaults = dict(sigma_intra=0.5, target_delta_inter=2.0, test_per_class=12,
                    base_train_per_class=10, seed=seed, offset=6.0)
    defaults.update(kw)
    return SynthSpec(protocol, **defaults)


@pytest.fixture
def small_dataset():
    return generate_dataset(small_spec())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
