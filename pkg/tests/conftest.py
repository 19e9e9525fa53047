from __future__ import annotations

import numpy as np
import pytest

from setupsched.cli import gen_random
from setupsched.core import Instance


def random_corpus(count, seed, n_max, k_max, s_choices=(1.0, 2.0), k_fixed=None, heavy=False):
    """Seeded random instances, sizes in [1, 4] unless crowded.

    With ``heavy`` every other instance squeezes its releases into a short
    horizon and draws sizes up to 8, so that queues build up.
    """
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        n = int(rng.integers(1, n_max + 1))
        k = k_fixed or int(rng.integers(1, k_max + 1))
        s = float(rng.choice(s_choices))
        crowded = heavy and i % 2
        spread = float(rng.uniform(0.02, 0.3)) if crowded else float(rng.uniform(0.5, 2.0))
        out.append(gen_random(n, k, spread * n, 8.0 if crowded else 4.0, seed * 100_000 + i, s))
    return out


@pytest.fixture
def e1() -> Instance:
    # s = 2; two type-A jobs around one type-B job
    return Instance.build(2.0, [(0.0, 1.0, 0), (0.0, 1.0, 1), (0.5, 1.0, 0)])
