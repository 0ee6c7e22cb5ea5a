import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import random_concept_text  # noqa: E402

from cate.alc import Axiom, parse_concept  # noqa: E402

CONCEPTS = [f"C{i}" for i in range(50)]
ROLES = [f"r{i}" for i in range(10)]


def random_concept(rng, max_depth=5, concepts=CONCEPTS, roles=ROLES):
    return parse_concept(random_concept_text(rng, concepts, roles, max_depth))


def random_axiom(rng, max_depth=5, concepts=CONCEPTS, roles=ROLES):
    return Axiom(random_concept(rng, max_depth, concepts, roles), random_concept(rng, max_depth, concepts, roles))


@pytest.fixture
def rng():
    return random.Random(20240611)
