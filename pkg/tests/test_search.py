import io
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sourcedetect.lattice import REFERENCE_KERNELS, RngStream, SimParams, SiteIndex, make_kernel
from sourcedetect.oracle import ExpectedFieldSim
from sourcedetect.particles import ParticleSim
from sourcedetect.search import (
    Alg1Config,
    Alg2Config,
    _best,
    alg1_run,
    alg2_run,
    brownian_sites,
    find_seed_site,
    scan_line,
    square_window,
    success_check,
    variance_update,
)
from sourcedetect.sensors import MeasurementLedger

E = SiteIndex(0, 0)
K2 = make_kernel(*REFERENCE_KERNELS["p2"])
H = SimParams().h


@pytest.mark.parametrize(
    "args, expected",
    [((1, 5, 2, 0.5, 0), 0.5), ((1, 2, 5, 0.5, 0), 2.0), ((1, 3, 3, 0.5, 1), 1.0), ((1, 3, 3, 0.5, 0), 0.5)],
)
def test_variance_update(args, expected):
    assert variance_update(*args) == expected


def test_success_check():
    assert success_check(E, E)
    assert success_check(SiteIndex(0, -1), E)
    assert not success_check(SiteIndex(1, 1), E)
    assert not success_check(SiteIndex(2, 0), E)
    assert not success_check(None, E)


def test_square_window_shape():
    w = square_window(SiteIndex(3, -2), 18)
    assert len(w) == 19 * 19
    assert w[:, 0].min() == -6 and w[:, 0].max() == 12


def test_scan_line_covers_r_squared_each_side():
    line = scan_line(SiteIndex(0, 4), 24)
    assert len(line) == 2 * 576 + 1
    assert (line[:, 1] == 4).all()
    params = SimParams()
    assert params.inside(line[:, 0], line[:, 1]).sum() == 307


def test_argmax_ties_go_to_smallest_site():
    sites = np.array([[-1, 5], [0, 0], [0, 2]])
    w, lam = _best(sites, np.array([4, 9, 9]), 3)
    assert w == (0, 0) and lam == 3.0


@given(st.integers(0, 10**6), st.sampled_from([0.05, 0.2, 1.0, 3.0]), st.integers(2, 24))
def test_brownian_sites_within_budget(seed, L, r):
    sites = brownian_sites(SiteIndex(10, 3), K2, L, r, H, RngStream(seed))
    assert 1 <= len(sites) <= r * r
    assert len(np.unique(sites, axis=0)) == len(sites)
    assert [tuple(s) for s in sites] == sorted(tuple(s) for s in sites)


def test_brownian_sites_start_at_current_iterate_and_head_upstream():
    w = SiteIndex(40, 10)
    sites = brownian_sites(w, K2, 0.01, 24, H, RngStream(0))
    assert (40, 10) in {tuple(s) for s in sites}
    # tiny spread: the set follows the backward drift ray w - q k
    assert sites[:, 0].min() < 40 - 100 * K2.q[0]


def test_brownian_sites_respect_filter():
    params = SimParams()
    inside = lambda s: params.inside(s[:, 0], s[:, 1])  # noqa: E731
    sites = brownian_sites(SiteIndex(-150, 0), K2, 0.2, 24, H, RngStream(1), inside=inside)
    assert params.inside(sites[:, 0], sites[:, 1]).all()


def test_brownian_path_count_follows_spread():
    # L r + 1 paths of r / L points; L = 1, r = 3 gives 4 paths of 3 points at most 9 sites
    sites = brownian_sites(E, K2, 1.0, 3, H, RngStream(2))
    assert len(sites) <= 9


def test_seed_site_has_one_to_three_particles():
    sim = ParticleSim(K2, SimParams(), RngStream(4))
    w = find_seed_site(sim, RngStream(4, 1))
    assert sim.step_index == 30
    assert 1 <= sim.values(np.array([w]))[0] <= 3


def _trial(alg, seed):
    sim = ParticleSim(K2, SimParams(), RngStream(seed, 0))
    obs = RngStream(seed, 1)
    ledger = MeasurementLedger(24 * 24)
    w0 = find_seed_site(sim, obs)
    if alg == "alg1":
        return alg1_run(sim, Alg1Config(r=18), w0, ledger), ledger
    return alg2_run(sim, Alg2Config(r=24), w0, ledger, obs), ledger


@pytest.mark.parametrize("seed", range(4))
def test_alg1_iterates_stay_in_previous_window(seed):
    trace, ledger = _trial("alg1", seed)
    pts = [it.w for it in trace.iterates]
    for a, b in zip(pts, pts[1:]):
        assert max(abs(a.i - b.i), abs(a.j - b.j)) <= math.ceil(18 / 2)
    assert trace.measurements == ledger.total_measurements


@pytest.mark.parametrize("seed", range(4))
def test_alg2_spread_ratios(seed):
    trace, _ = _trial("alg2", seed)
    Ls = [it.L for it in trace.iterates]
    assert Ls[0] == pytest.approx(math.sqrt(H))
    for a, b in zip(Ls, Ls[1:]):
        assert b > 0
        assert b / a in (0.5, 1.0, 2.0)


@pytest.mark.parametrize("alg", ["alg1", "alg2"])
def test_traces_are_reproducible(alg):
    a, _ = _trial(alg, 9)
    b, _ = _trial(alg, 9)
    assert a.iterates == b.iterates and a.converged_site == b.converged_site


def test_trace_ndjson_schema():
    trace, _ = _trial("alg2", 1)
    buf = io.StringIO()
    trace.write_ndjson(buf)
    rows = [json.loads(line) for line in buf.getvalue().splitlines()]
    assert [r["j"] for r in rows] == list(range(len(trace.iterates)))
    assert set(rows[0]) == {"j", "n", "w_i", "w_j", "lambda", "L"}


def test_fixpoint_means_same_site_twice():
    trace, _ = _trial("alg1", 2)
    if trace.converged_site is not None:
        assert trace.iterates[-1].w == trace.iterates[-2].w == trace.converged_site


def _stub(name):
    sim = ExpectedFieldSim(make_kernel(*REFERENCE_KERNELS[name]), SimParams())
    sim.advance_to(30)
    return sim


@pytest.mark.parametrize("name", list(REFERENCE_KERNELS))
@pytest.mark.parametrize("seed", [(0, 0), (20, 3), (5, -9), (-10, 12)])
def test_alg1_noise_free_finds_source(name, seed):
    sim = _stub(name)
    if sim.values(np.array([seed]))[0] <= 0:
        pytest.skip("seed site outside the support")
    trace = alg1_run(sim, Alg1Config(r=18), SiteIndex(*seed), MeasurementLedger(0))
    assert trace.converged_site == E


@pytest.mark.parametrize("name", list(REFERENCE_KERNELS))
def test_alg2_noise_free_monotone(name):
    sim = _stub(name)
    trace = alg2_run(sim, Alg2Config(r=24), SiteIndex(15, 2), MeasurementLedger(0), RngStream(0, 1))
    lams = [it.lam for it in trace.iterates]
    Ls = [it.L for it in trace.iterates]
    assert all(b >= a for a, b in zip(lams, lams[1:]))
    assert all(b <= a for a, b in zip(Ls, Ls[1:]))


def test_config_validation():
    with pytest.raises(ValueError):
        Alg2Config(c=1.5)
    with pytest.raises(ValueError):
        Alg1Config(r=1)
