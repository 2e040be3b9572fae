"""Shared fixtures: the bundled dataset, one trained model per session.

Training runs once (about ten seconds) and everything downstream
(photonic decomposition, experiment smoke tests, acceptance criteria)
reuses the result.  The acceptance tests additionally record one
PASS/FAIL line per criterion, printed in a summary section at the end
of the run.
"""

import pathlib
import time

import numpy as np
import pytest

from spnn import mnist, network

DATA_DIR = pathlib.Path(__file__).resolve().parent.parent / "data"

TRAIN_IMAGES = DATA_DIR / "train-images-idx3-ubyte.gz"
TRAIN_LABELS = DATA_DIR / "train-labels-idx1-ubyte.gz"
TEST_IMAGES = DATA_DIR / "test-images-idx3-ubyte.gz"
TEST_LABELS = DATA_DIR / "test-labels-idx1-ubyte.gz"

# One line per acceptance criterion, shown after the test summary.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def raw_data():
    """Raw image/label arrays for both splits."""
    train_images, train_labels = mnist.load_idx(TRAIN_IMAGES, TRAIN_LABELS)
    test_images, test_labels = mnist.load_idx(TEST_IMAGES, TEST_LABELS)
    return {
        "train_images": train_images,
        "train_labels": train_labels.astype(int),
        "test_images": test_images,
        "test_labels": test_labels.astype(int),
    }


@pytest.fixture(scope="session")
def dataset(raw_data):
    """Complex feature vectors plus labels for both splits."""
    return {
        "train_features": mnist.preprocess_dataset(raw_data["train_images"]),
        "train_labels": raw_data["train_labels"],
        "test_features": mnist.preprocess_dataset(raw_data["test_images"]),
        "test_labels": raw_data["test_labels"],
    }


@pytest.fixture(scope="session")
def trained(dataset):
    """Default-config training run with its wall time and accuracies."""
    t0 = time.monotonic()
    model = network.train(dataset["train_features"], dataset["train_labels"])
    seconds = time.monotonic() - t0
    predict = lambda x: network.forward_batch(model.weights, x)
    return {
        "model": model,
        "seconds": seconds,
        "train_accuracy": network.accuracy(
            predict, (dataset["train_features"], dataset["train_labels"])),
        "test_accuracy": network.accuracy(
            predict, (dataset["test_features"], dataset["test_labels"])),
    }


@pytest.fixture(scope="session")
def photonic(trained):
    return network.PhotonicSPNN.from_model(trained["model"])
