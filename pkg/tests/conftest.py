"""Shared generators for randomized suites.

LP-heavy suites use plain seeded ``random.Random`` instances so runtimes
stay predictable; structural properties use hypothesis.
"""

import random

import pytest
from hypothesis import settings

from surprise_engine import MassFunction, ProductFrame

settings.register_profile("ci", deadline=None, derandomize=True)
settings.load_profile("ci")


def random_frame(rng: random.Random, max_points: int = 8) -> ProductFrame:
    """A frame whose product space has at most ``max_points`` points."""
    shapes = {
        2: [(2,)], 3: [(3,)], 4: [(4,), (2, 2)], 5: [(5,)],
        6: [(6,), (2, 3)], 8: [(8,), (2, 4), (2, 2, 2)],
    }
    choices = [s for pts, ss in shapes.items() if pts <= max_points for s in ss]
    shape = rng.choice(choices)
    variables = []
    for i, size in enumerate(shape):
        name = f"V{i}"
        if size == 2:
            values = ("Yes", "No")
        else:
            values = tuple(f"v{j}" for j in range(size))
        variables.append((name, values))
    return ProductFrame(variables)


def random_mass(frame: ProductFrame, rng: random.Random, max_focals: int = 4) -> MassFunction:
    """A mass function with at most ``max_focals`` focal elements."""
    full = frame.full_bits
    count = rng.randint(1, min(max_focals, full))
    focals = set()
    while len(focals) < count:
        bits = rng.randint(1, full)
        focals.add(bits)
    weights = [rng.random() + 0.05 for _ in focals]
    total = sum(weights)
    return MassFunction(frame, {b: w / total for b, w in zip(focals, weights)})


def random_subset(frame: ProductFrame, rng: random.Random, nonempty: bool = False):
    lo = 1 if nonempty else 0
    return frame.subset(rng.randint(lo, frame.full_bits))


@pytest.fixture
def rng():
    return random.Random(20260809)
