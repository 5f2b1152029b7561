import pytest
from hypothesis import settings

from sourcedetect.lattice import REFERENCE_KERNELS, SimParams, make_kernel

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


@pytest.fixture
def kernels():
    return {name: make_kernel(*p) for name, p in REFERENCE_KERNELS.items()}


@pytest.fixture
def small_params():
    # 5x5 interior: indices -2..2
    return SimParams(h=1.0, injection_mean=4.0, box_half_width=3.0)
