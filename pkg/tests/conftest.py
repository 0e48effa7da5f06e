import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from plaus.rankings import ClassSpace, PartialRanking

settings.register_profile(
    "suite",
    max_examples=50,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@st.composite
def partial_rankings(draw, min_classes=2, max_classes=8, max_block=4):
    """A random partial ranking: some prefix of a shuffle, cut into blocks."""
    k = draw(st.integers(min_classes, max_classes))
    space = ClassSpace(size=k)
    order = draw(st.permutations(list(range(k))))
    ranked = draw(st.integers(0, k))
    blocks, start = [], 0
    while start < ranked:
        size = draw(st.integers(1, min(max_block, ranked - start)))
        blocks.append(list(order[start : start + size]))
        start += size
    return PartialRanking(blocks, space)


@st.composite
def weighted_rankings(draw, **kwargs):
    """(lam, ranking) with strictly positive weights over the same space."""
    ranking = draw(partial_rankings(**kwargs))
    k = ranking.class_space.size
    lam = draw(
        st.lists(
            st.floats(0.05, 5.0, allow_nan=False, allow_infinity=False),
            min_size=k,
            max_size=k,
        )
    )
    return np.array(lam), ranking


# The running example: a skin-lesion case with eight candidate conditions,
# six annotators and two competing predictions.
DERM_NAMES = (
    "Pyogenic granuloma",
    "Hemangioma",
    "Melanoma",
    "Angiokeratoma of skin",
    "Atypical Nevus",
    "Melanocytic Nevus",
    "O/E - ecchymoses present",
    "Skin Tag",
)
DERM_RISK = {0: 0, 1: 1, 2: 2, 3: 0, 4: 1, 5: 0, 6: 0, 7: 0}
DERM_BLOCKS = [
    [[0], [1], [2]],
    [[3], [4]],
    [[1], [5, 2, 6]],
    [[1, 2, 7]],
    [[2]],
    [[1], [2], [5]],
]


@pytest.fixture(scope="session")
def derm_space():
    return ClassSpace(size=8, names=DERM_NAMES, risk=DERM_RISK)


@pytest.fixture(scope="session")
def derm_rankings(derm_space):
    return [PartialRanking(blocks, derm_space) for blocks in DERM_BLOCKS]
