import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sourcedetect.hydro import (
    LineMeasure,
    QuadratureFailure,
    adaptive_simpson,
    constant,
    convergence_study,
    discrete_pairing,
    gaussian_bump,
    limit_pairing,
)
from sourcedetect.lattice import REFERENCE_KERNELS, SimParams, make_kernel

K = make_kernel(*REFERENCE_KERNELS["p2"])


def test_simpson_polynomial_exact():
    assert adaptive_simpson(lambda s: s**3 - 2 * s, 0.0, 2.0) == pytest.approx(0.0, abs=1e-12)
    assert adaptive_simpson(math.sin, 0.0, math.pi) == pytest.approx(2.0, abs=1e-10)


def test_simpson_gives_up():
    with pytest.raises(QuadratureFailure):
        adaptive_simpson(lambda s: 1.0 / (s - 0.3) if s != 0.3 else 0.0, 0.0, 1.0, max_depth=5)


@given(st.floats(0.0, 3.0), st.floats(1.0, 1000.0))
def test_limit_pairing_of_constant_is_rate_times_t(t, rate):
    m = LineMeasure((0.0, 0.0), K.q, rate, t)
    f = constant(1.0, (0.0, 0.0), 10.0)
    assert limit_pairing(m, f) == pytest.approx(m.mass, rel=1e-9, abs=1e-9)


def test_bump_off_support_pairs_to_zero():
    m = LineMeasure((0.0, 0.0), K.q, 640.0, 1.0)
    f = gaussian_bump((0.0, 3.0), 0.1)
    assert limit_pairing(m, f) == 0.0
    assert f(0.0, 3.0 + 0.41) == 0.0


def test_discrete_mass_is_injected_total():
    h = 10 * 2.0**-6
    params = SimParams(h=h, injection_mean=h * 640, box_half_width=1e9)
    n = math.floor(1.0 / h)
    got = discrete_pairing(K, params, constant(1.0, (0.0, 0.0), 2.0), 1.0)
    assert got == pytest.approx((n + 1) * h * 640, rel=1e-12)


def test_errors_shrink_with_mesh():
    q = K.q
    f = gaussian_bump((q[0] / 2, q[1] / 2), 0.2)
    table = convergence_study(K, f, 1.0, [10 * 2.0**-k for k in (4, 5, 6)], rate=640.0)
    assert table.errors[0] > table.errors[1] > table.errors[2]
    assert table.slope > 0


def test_convergence_csv(tmp_path):
    q = K.q
    f = gaussian_bump((q[0] / 2, q[1] / 2), 0.2)
    table = convergence_study(K, f, 1.0, [0.625, 0.3125], rate=640.0)
    path = tmp_path / "conv.csv"
    table.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "h,error"
    assert float(lines[1].split(",")[1]) == table.errors[0]
    assert lines[-1].startswith("slope,")


def test_bump_is_smooth_at_edge():
    f = gaussian_bump((0.0, 0.0), 1.0)
    x = np.array([3.999, 4.0, 4.001])
    v = f(x, np.zeros(3))
    assert v[1] == 0.0 and v[2] == 0.0 and 0 < v[0] < 1e-6
