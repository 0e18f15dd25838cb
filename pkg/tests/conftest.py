import logging
from pathlib import Path

import pytest

from hslearn import load_csv, split_stratified, standardize

DATA_DIR = Path(__file__).parent / "data"

# sphere-skip warnings are expected noise in hierarchical runs
logging.getLogger("hslearn.hierarchy").setLevel(logging.ERROR)


@pytest.fixture(scope="session")
def data_dir():
    return DATA_DIR


@pytest.fixture(scope="session")
def iris():
    return load_csv(DATA_DIR / "iris.csv", label_column="species")


@pytest.fixture(scope="session")
def breast_cancer():
    return load_csv(DATA_DIR / "breast_cancer.csv", label_column="diagnosis")


@pytest.fixture(scope="session")
def iris_train(iris):
    """Standardized iris training partition for a fixed split."""
    split = split_stratified(iris, (0.70, 0.15, 0.15), seed=0)
    train, _ = standardize(split.train)
    return train
