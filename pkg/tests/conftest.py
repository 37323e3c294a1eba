import numpy as np
import pytest

from imgdisguise import generate_key
from imgdisguise.synthetic import stroke_images


@pytest.fixture(scope="session")
def mnist_key():
    """28x28 grayscale key at the reference settings: 7x7 blocks,
    orthogonal matrices, noise level 100, ten classes."""
    return generate_key(
        channels=1,
        height=28,
        width=28,
        block_rows=7,
        block_cols=7,
        matrix_kind="orthogonal",
        noise_level=100.0,
        class_count=10,
        seed=11,
    )


@pytest.fixture(scope="session")
def small_train():
    """200 handwriting-like images (20 per class)."""
    return stroke_images(20, seed=3, part=0)


@pytest.fixture(scope="session")
def small_test():
    """100 held-out images from the same class prototypes."""
    return stroke_images(10, seed=3, part=1)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
