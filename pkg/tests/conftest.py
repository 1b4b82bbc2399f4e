import numpy as np
import pytest

from braillekit.geometry import DEFAULT_GEOMETRY
from braillekit.synth import SynthSpec, random_patterns, render_page


@pytest.fixture
def geometry():
    return DEFAULT_GEOMETRY


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_page(
    rows=6,
    cols=11,
    noise=0.0,
    skew=0.0,
    seed=0,
    margin=70.0,
    patterns=None,
    pattern_seed=None,
):
    """Single-sided synthetic page with its exact annotation."""
    if patterns is None:
        prng = np.random.default_rng(seed if pattern_seed is None else pattern_seed)
        patterns = random_patterns(rows, cols, prng, nonempty_margins=True)
    spec = SynthSpec(
        rows=rows,
        cols=cols,
        recto_patterns=patterns,
        noise_sigma=noise,
        skew_degrees=skew,
        seed=seed,
        margin=margin,
    )
    img, annotation = render_page(spec)
    return img, annotation, spec
