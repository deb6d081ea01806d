"""Shared hypothesis strategies."""
import numpy as np
from hypothesis import strategies as st

from dyadic_weights.dyadic import build_weight


@st.composite
def weights(draw, max_depth=6, lo=-4.0, hi=4.0):
    depth = draw(st.integers(0, max_depth))
    logs = draw(st.lists(st.floats(lo, hi, allow_nan=False), min_size=1 << depth, max_size=1 << depth))
    return build_weight(np.exp(np.array(logs)))


@st.composite
def deep_weights(draw, max_depth=6):
    """Depth at least one, so weak constants and deltas exist."""
    depth = draw(st.integers(1, max_depth))
    logs = draw(st.lists(st.floats(-3.0, 3.0, allow_nan=False), min_size=1 << depth, max_size=1 << depth))
    return build_weight(np.exp(np.array(logs)))
