import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq, minimize_scalar

from kernid import (
    Design,
    DimensionMismatch,
    Infeasible,
    InvalidBounds,
    Outcome,
    RbfParams,
    WitnessSearchConfig,
    build_gram,
    find_witness,
    gram_residual,
    rbf_periodic,
    reproduce_paper_examples,
    solve_periodic_counterexample,
    two_rbf,
)
from kernid.golden import ALL_MULTIPLES, NO_MULTIPLES, TWO_RBF_OCTAHEDRON
from kernid.kernels import PeriodicParams
from kernid.witness import GramProfileResidual, relative_distance

pos = st.floats(0.1, 10.0)


def test_config_validation():
    with pytest.raises(InvalidBounds):
        WitnessSearchConfig(param_bounds=((1.0, 1.0),))
    with pytest.raises(InvalidBounds):
        WitnessSearchConfig(param_bounds=((2.0, -2.0),) * 4)
    with pytest.raises(ValueError):
        WitnessSearchConfig(starts=0)
    with pytest.raises(ValueError):
        WitnessSearchConfig(residual_tol=0.0)
    with pytest.raises(InvalidBounds):
        WitnessSearchConfig(param_bounds=((-1, 1),) * 3).bounds_for(4)


def test_gram_residual_examples():
    d = NO_MULTIPLES.design
    g1 = build_gram(NO_MULTIPLES.first, d)
    assert gram_residual(NO_MULTIPLES.first, g1, d) == 0.0
    assert gram_residual(NO_MULTIPLES.second, g1, d) <= 1e-7
    d = TWO_RBF_OCTAHEDRON.design
    assert gram_residual(TWO_RBF_OCTAHEDRON.second, build_gram(TWO_RBF_OCTAHEDRON.first, d), d) <= 1e-12
    with pytest.raises(DimensionMismatch):
        gram_residual(NO_MULTIPLES.first, np.eye(3), NO_MULTIPLES.design)


@settings(max_examples=40, deadline=None)
@given(a=st.tuples(pos, pos), b=st.tuples(pos, pos),
       pts=st.lists(st.floats(-4, 4), min_size=2, max_size=6))
def test_residual_symmetry_and_identity(a, b, pts):
    if math.isclose(a[1], b[1], rel_tol=1e-6):
        return
    d = Design(pts)
    spec = two_rbf(RbfParams(*a), RbfParams(*b))
    swapped = two_rbf(RbfParams(*b), RbfParams(*a))
    other = two_rbf(RbfParams(a[0] * 1.1, a[1]), RbfParams(*b))
    g = build_gram(other, d)
    assert gram_residual(spec, build_gram(spec, d), d) == 0.0
    assert gram_residual(spec, g, d) == gram_residual(swapped, g, d)


@settings(max_examples=40, deadline=None)
@given(t=st.tuples(pos, pos, pos, pos), c=st.tuples(pos, pos, pos, pos),
       pts=st.lists(st.floats(-10, 10), min_size=2, max_size=7))
def test_profile_residual_equals_full_residual(t, c, pts):
    d = Design(pts)
    target = rbf_periodic(RbfParams(t[0], t[1]), PeriodicParams(t[2], t[3], 3.0))
    cand = rbf_periodic(RbfParams(c[0], c[1]), PeriodicParams(c[2], c[3], 3.0))
    fast = GramProfileResidual(target, d)(np.log(cand.values()))
    full = gram_residual(cand, build_gram(target, d), d)
    assert fast == pytest.approx(full, rel=1e-9, abs=1e-14)


def test_find_witness_recovers_second_set():
    rep = find_witness(NO_MULTIPLES.first, NO_MULTIPLES.design, WitnessSearchConfig(rng_seed=0))
    assert rep.outcome is Outcome.WITNESS_FOUND and rep.found
    assert relative_distance(rep.params, NO_MULTIPLES.second) <= 1e-3
    assert rep.residual <= 1e-8 and rep.distance >= 1e-3
    # soundness: the reported residual re-verifies on rebuilt Gram matrices
    g = build_gram(NO_MULTIPLES.first, NO_MULTIPLES.design)
    assert abs(gram_residual(rep.params, g, NO_MULTIPLES.design) - rep.residual) <= 1e-12
    assert rep.to_dict()["outcome"] == "witness_found"


def test_find_witness_flat_smoothness():
    cfg = WitnessSearchConfig(starts=16, rng_seed=1)
    rep = find_witness(ALL_MULTIPLES.first, ALL_MULTIPLES.design, cfg)
    assert rep.found
    s1, s2 = ALL_MULTIPLES.first.second.s, rep.params.second.s
    assert abs(s2 - s1) / s1 >= cfg.distinct_tol
    # entries sit at lags 7k, so tau and sigma carry the Gram; ell is nearly free as well
    assert rep.params.second.tau == pytest.approx(1.0, rel=1e-4)


def test_find_witness_identifiable_design():
    target = rbf_periodic(RbfParams(1.0, 2.0), PeriodicParams(1.0, 1.0, 7.0))
    rep = find_witness(target, Design([0, 3, 7, 10]))
    assert rep.outcome is Outcome.NO_WITNESS and not rep.found
    assert rep.residual > 1e-8
    assert "no witness found under config" in rep.summary()


def test_find_witness_deterministic():
    cfg = WitnessSearchConfig(starts=6, rng_seed=3)
    a = find_witness(NO_MULTIPLES.first, NO_MULTIPLES.design, cfg)
    b = find_witness(NO_MULTIPLES.first, NO_MULTIPLES.design, cfg)
    assert a.to_dict() == b.to_dict()


def test_find_witness_rejects_multidim_periodic():
    with pytest.raises(DimensionMismatch):
        find_witness(NO_MULTIPLES.first, TWO_RBF_OCTAHEDRON.design)


def test_two_rbf_octahedron_witness():
    rep = find_witness(TWO_RBF_OCTAHEDRON.first, TWO_RBF_OCTAHEDRON.design,
                       WitnessSearchConfig(starts=32, param_bounds=((-3, 10),) * 4))
    assert rep.found
    # label swaps are canonicalised away, so the witness is a genuinely different set
    assert rep.params.first.ell < rep.params.second.ell
    assert rep.distance >= 1e-3


def test_analytic_counterexample_reproduces_published_pair():
    ce = solve_periodic_counterexample([0, 1, 2, 3], 4.0, coefficients=(1, -3, 6, -2))
    d = NO_MULTIPLES.design
    assert gram_residual(ce.second, build_gram(ce.first, d), d) <= 1e-12
    assert relative_distance(ce.first, NO_MULTIPLES.first) <= 1e-6
    assert relative_distance(ce.second, NO_MULTIPLES.second) <= 1e-6
    assert ce.second.second.tau == pytest.approx(math.sqrt(3), rel=1e-12)


def test_analytic_counterexample_random_pattern():
    ce = solve_periodic_counterexample([0, 1, 2, 3], 4.0, rng_seed=5)
    d = Design([0, 1, 2, 3])
    assert gram_residual(ce.second, build_gram(ce.first, d), d) <= 1e-7
    assert relative_distance(ce.first, ce.second) > 1e-3


def test_analytic_counterexample_infeasible():
    with pytest.raises(Infeasible):
        solve_periodic_counterexample([0, 7, 14, 21], 7.0)
    with pytest.raises(ValueError):
        solve_periodic_counterexample([0, 1, 2], 4.0)


def test_reproduce_examples():
    res = {r.example_id: r for r in reproduce_paper_examples()}
    assert all(r.passed for r in res.values())
    assert res["rbf_periodic_all_multiples"].max_abs_deviation == 0.0
    assert res["rbf_periodic_no_multiples"].max_abs_deviation <= 5e-7
    assert res["two_rbf_octahedron"].max_abs_deviation <= 1e-9


def test_collapsed_design_has_witness():
    # three equally spaced points: the RBF+periodic condition holds as stated, yet
    # three Gram values cannot determine four parameters
    target = rbf_periodic(RbfParams(0.9, 2.0), PeriodicParams(1.9, 0.8, 2.0))
    rep = find_witness(target, Design([0, 1, 2]), WitnessSearchConfig(starts=16))
    assert rep.found and rep.residual <= 1e-8


def test_second_shape_design_has_witness():
    # X = {0, 1, 3, 4}, p = 2 holds only {0, q, mp - q, mp}. The periodic part is
    # equal at 0 and 4 and at 1 and 3, so the RBF part must match two differences,
    # whose ratio R(u) in u = 1/l² rises then falls: two length-scales fit.
    def ratio(u):
        return (math.exp(-u) - math.exp(-9 * u)) / (1 - math.exp(-16 * u))

    sig, ell, tau, s = 1.0, 3.0, 1.0, 1.0
    u1 = 1 / ell**2
    peak = minimize_scalar(lambda u: -ratio(u), bounds=(1e-3, 10.0), method="bounded").x
    assert u1 < peak
    u2 = brentq(lambda u: ratio(u) - ratio(u1), peak, 100.0, xtol=1e-15)
    sig2sq = sig**2 * (1 - math.exp(-16 * u1)) / (1 - math.exp(-16 * u2))
    tau2sq = sig**2 + tau**2 - sig2sq
    per = sig**2 * math.exp(-u1) + tau**2 * math.exp(-2 / s**2) - sig2sq * math.exp(-u2)
    s2 = math.sqrt(-2 / math.log(per / tau2sq))
    a = rbf_periodic(RbfParams(sig, ell), PeriodicParams(tau, s, 2.0))
    b = rbf_periodic(RbfParams(math.sqrt(sig2sq), 1 / math.sqrt(u2)), PeriodicParams(math.sqrt(tau2sq), s2, 2.0))
    d = Design([1, 4, 5])
    assert relative_distance(a, b) > 0.3
    assert np.max(np.abs(build_gram(a, d) - build_gram(b, d))) <= 1e-14

    rep = find_witness(a, d, WitnessSearchConfig(starts=32, rng_seed=1))
    assert rep.found and rep.residual <= 1e-8
