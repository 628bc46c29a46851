import numpy as np
import pytest

from fluencykit.audio import AudioBuffer
from fluencykit.synthetic import random_plan, render_plan


@pytest.fixture
def rng():
    return np.random.default_rng(20240801)


def make_burst_buffer(seed: int, **plan_kwargs) -> tuple[AudioBuffer, object]:
    """Convenience wrapper: (rendered buffer, plan with ground truth)."""
    rng = np.random.default_rng(seed)
    plan = random_plan(rng, **plan_kwargs)
    return render_plan(plan, rng), plan
