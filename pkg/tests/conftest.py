import numpy as np
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from roughstab.tensor_algebra import LevelTwoElement

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@st.composite
def elements(draw, dim=None, unit=True):
    n = dim if dim is not None else draw(st.integers(1, 4))
    l0 = 1.0 if unit else draw(finite)
    l1 = draw(arrays(float, n, elements=finite))
    l2 = draw(arrays(float, (n, n), elements=finite))
    return LevelTwoElement(l0, l1, l2)


def zigzag(rng, n_points, dim=1):
    from roughstab.paths import SampledPath

    times = np.cumsum(rng.uniform(0.1, 1.0, n_points))
    return SampledPath(times, rng.normal(size=(n_points, dim)))
