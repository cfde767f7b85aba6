import os

import pytest

from negsym import data


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running training runs")


@pytest.fixture(scope="session")
def full_mnist():
    """Directory with the full MNIST IDX files, or None."""
    return data.find_mnist()


@pytest.fixture(scope="session")
def mnist_dir(full_mnist, tmp_path_factory):
    """Full MNIST when available, otherwise the mlxtend 5000-image sample as IDX files."""
    if full_mnist is not None:
        return full_mnist
    pytest.importorskip("mlxtend")
    return data.export_mnist_subset(tmp_path_factory.mktemp("mnist-subset"))


@pytest.fixture(scope="session")
def digit_task(mnist_dir):
    train_set = data.build_digit_task(data.mnist_split(mnist_dir, "train"))
    test_set = data.build_digit_task(data.mnist_split(mnist_dir, "test"))
    return train_set, test_set


@pytest.fixture(scope="session")
def full_mode():
    return os.environ.get("NEGSYM_FULL", "") not in ("", "0")
