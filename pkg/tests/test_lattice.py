import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sourcedetect.lattice import (
    DEFAULT_H,
    DegenerateKernel,
    InvalidMean,
    InvalidParams,
    NonPositiveProbability,
    NotNormalized,
    RngStream,
    SimParams,
    SiteIndex,
    make_kernel,
    sample_geometric,
)


def test_drift_of_reference_kernel():
    k = make_kernel(0.70, 0.25, 0.01, 0.04)
    assert k.q == pytest.approx((0.69, 0.21))


def test_reversed_kernel_swaps_axes():
    k = make_kernel(0.6, 0.3, 0.025, 0.075)
    assert k.reversed_p == (0.025, 0.075, 0.6, 0.3)


@pytest.mark.parametrize(
    "p, err",
    [
        ((0.5, 0.0, 0.5, 0.0), NonPositiveProbability),
        ((0.5, 0.3, 0.1, 0.2), NotNormalized),
        ((0.25, 0.25, 0.25, 0.25), DegenerateKernel),
        ((0.3, 0.2, 0.3, 0.2), DegenerateKernel),
    ],
)
def test_make_kernel_rejects(p, err):
    with pytest.raises(err):
        make_kernel(*p)


@given(st.lists(st.floats(0.01, 1.0), min_size=4, max_size=4))
def test_normalized_positive_kernels_accepted_unless_driftless(raw):
    p = [x / math.fsum(raw) for x in raw]
    p[3] = 1.0 - math.fsum(p[:3])
    if p[3] <= 0:
        return
    if abs(p[0] - p[2]) + abs(p[1] - p[3]) == 0:
        with pytest.raises(DegenerateKernel):
            make_kernel(*p)
    else:
        k = make_kernel(*p)
        assert k.q == (p[0] - p[2], p[1] - p[3])


def test_box_index_half_width():
    # 6 / h = 153.6, so index 153 is the last interior site
    params = SimParams()
    assert params.h == DEFAULT_H
    assert params.box_index_half_width == 153
    assert params.inside(153, -153)
    assert not params.inside(154, 0)
    assert params.rate == pytest.approx(640.0)


def test_exact_boundary_is_absorbing():
    # box 3 with h = 1: index 3 is on the boundary, 2 is the last interior site
    assert SimParams(h=1.0, injection_mean=2.0, box_half_width=3.0).box_index_half_width == 2


def test_params_validation():
    with pytest.raises(InvalidParams):
        SimParams(injection_mean=0.5)
    with pytest.raises(InvalidParams):
        SimParams(source=SiteIndex(200, 0))


def test_site_index_helpers():
    w = SiteIndex(2, -1)
    assert w.position(0.5) == (1.0, -0.5)
    assert SiteIndex.from_position(1.0, -0.5, 0.5) == w
    assert set(w.neighbors()) == {(3, -1), (1, -1), (2, 0), (2, -2)}


def test_rng_streams_reproducible_and_distinct():
    a = RngStream(7, 3).generator.random(5)
    b = RngStream(7, 3).generator.random(5)
    c = RngStream(7, 4).generator.random(5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_geometric_moments():
    draws = sample_geometric(RngStream(1, 0), 25.0, size=1_000_000)
    assert draws.min() >= 1
    assert abs(draws.mean() - 25) < 0.1
    assert abs(draws.var() - 600) < 10


def test_geometric_mean_one_is_constant():
    assert set(sample_geometric(RngStream(0), 1.0, size=100).tolist()) == {1}


def test_geometric_rejects_small_mean():
    with pytest.raises(InvalidMean):
        sample_geometric(RngStream(0), 0.5)
