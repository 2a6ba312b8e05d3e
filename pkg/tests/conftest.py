import numpy as np
import pytest

from adasamp import glm
from adasamp.data import SparseDesign


def make_problem(
    d=20,
    n=12,
    loss="square",
    reg="l2",
    lam=0.1,
    seed=0,
    unit_columns=False,
):
    """Dense random problem wrapped in the sparse container."""
    rng = np.random.default_rng(seed)
    dense = rng.standard_normal((d, n)) / np.sqrt(d)
    if unit_columns:
        dense /= np.linalg.norm(dense, axis=0, keepdims=True)
    if loss == "square":
        labels = dense @ rng.standard_normal(n) + 0.1 * rng.standard_normal(d)
    else:
        labels = np.sign(rng.standard_normal(d))
        labels[labels == 0] = 1.0
    return glm.GlmProblem(SparseDesign.from_matrix(dense), labels, loss, reg, lam)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
