import pytest

from exploressl.data import make_partitions
from exploressl.synth import GeneratorFamily, SyntheticSpec, generate_synthetic


@pytest.fixture(scope="session")
def five_block_dataset():
    """Five classes with effectively disjoint vocabulary blocks; the
    true-parameter Bayes classifier is perfect on this generator."""
    spec = SyntheticSpec(
        num_classes=5,
        instances_per_class=60,
        vocab_size=50,
        separation=1e6,
        family=GeneratorFamily.MULTINOMIAL,
        rng_seed=1,
    )
    return generate_synthetic(spec)


@pytest.fixture(scope="session")
def five_block_partitions(five_block_dataset):
    return make_partitions(five_block_dataset, 2, 0.05, 10, 42)
