import csv

import numpy as np
import pytest
from hypothesis import given, strategies as st

from blassosep.duality import (
    DualPoint, dual_objective, f_conj_indicator, fenchel_young_check, g_conj_value, g_value,
    gap_report, max_certificate, primal_objective, residual_identity_check,
)
from blassosep.errors import GridMismatch
from blassosep.measures import SparseMeasure, tv_norm
from blassosep.operators import Grid, GridSignal, MultiChannelSignal, certificate_sup, forward
from blassosep.patterns import HalfEllipse, RaisedCosine, Triangle
from blassosep.synthesis import figure1, generate

GRID = Grid.from_interval(0.0, 3.0, 0.05)
PATTERNS = (HalfEllipse(0.3), Triangle(0.25, 0.8))
vectors = st.lists(st.floats(-10, 10), min_size=GRID.count, max_size=GRID.count).map(
    lambda v: GridSignal(GRID, v))
seeds = st.integers(0, 2 ** 32 - 1)


def random_measure(r, lo=0.5, hi=2.5, k=4):
    return SparseMeasure.from_pairs(zip(r.uniform(lo, hi, k), r.normal(0, 1, k)))


# -- conjugate of the quadratic ---------------------------------------------------

def test_g_conj_examples():
    assert g_conj_value(GridSignal(Grid(0.0, 1.0, 2), [0.0, 0.0])) == 0.0
    assert g_conj_value(GridSignal(Grid(0.0, 1.0, 2), [3.0, 4.0])) == 12.5


@given(vectors)
def test_quadratic_is_self_conjugate(v):
    assert g_conj_value(v) == g_value(v)


# -- indicator conjugate of the TV term ------------------------------------------

def test_indicator_at_zero_is_feasible():
    z = MultiChannelSignal.zeros(GRID, 2)
    out = f_conj_indicator(z, PATTERNS, 0.7)
    assert out.feasible and out.max_violation == -0.7


@given(seeds, st.floats(0.1, 10.0))
def test_indicator_scaled_to_twice_tau(seed, tau):
    r = np.random.default_rng(seed)
    x = MultiChannelSignal(GRID, r.standard_normal((2, GRID.count)))
    sups = [certificate_sup(c, y)[0] for c, y in zip(x.channels, PATTERNS)]
    scaled = MultiChannelSignal(GRID, x.values * (2 * tau / max(sups)))
    out = f_conj_indicator(scaled, PATTERNS, tau)
    assert not out.feasible
    assert out.max_violation == pytest.approx(tau, rel=1e-9)


@given(seeds, st.floats(0.1, 10.0))
def test_indicator_boundary_point_is_feasible(seed, tau):
    r = np.random.default_rng(seed)
    x = MultiChannelSignal(GRID, r.standard_normal((2, GRID.count)))
    sups = [certificate_sup(c, y)[0] for c, y in zip(x.channels, PATTERNS)]
    out = f_conj_indicator(MultiChannelSignal(GRID, x.values * (tau / max(sups))), PATTERNS, tau)
    assert out.feasible
    assert abs(out.max_violation) <= 1e-12 * tau


def test_indicator_rejects_wrong_channel_count():
    with pytest.raises(GridMismatch):
        f_conj_indicator(MultiChannelSignal.zeros(GRID, 3), PATTERNS, 1.0)


# -- objectives ------------------------------------------------------------------

@given(vectors)
def test_dual_objective_examples(b):
    nb2 = float(b.values @ b.values)
    assert dual_objective(b, b) == pytest.approx(0.5 * nb2, rel=1e-14, abs=1e-300)
    assert dual_objective(GridSignal.zeros(GRID), b) == 0.0
    assert dual_objective(b * 0.5, b) == pytest.approx(0.375 * nb2, rel=1e-14, abs=1e-300)


def test_dual_objective_grid_mismatch():
    with pytest.raises(GridMismatch):
        dual_objective(GridSignal.zeros(GRID), GridSignal.zeros(Grid(0.0, 0.1, 4)))


@given(vectors)
def test_primal_objective_at_zero(b):
    val = primal_objective(MultiChannelSignal.zeros(GRID, 2), b, 0.0, 0.3)
    assert val == pytest.approx(0.5 * float(b.values @ b.values), rel=1e-14, abs=1e-300)


@given(seeds, st.floats(0.01, 5.0))
def test_primal_objective_noiseless_truth(seed, alpha):
    r = np.random.default_rng(seed)
    nus = [random_measure(r) for _ in PATTERNS]
    x = MultiChannelSignal.from_channels([forward(nu, y, GRID) for nu, y in zip(nus, PATTERNS)])
    b = GridSignal(GRID, x.values.sum(axis=0))
    tv = sum(tv_norm(nu) for nu in nus)
    assert primal_objective(x, b, tv, alpha) == pytest.approx(alpha * tv, rel=1e-12)


def test_primal_objective_figure1_truth():
    spec = figure1()
    scen = generate(spec)
    val = primal_objective(scen.clean, scen.b, sum(tv_norm(m) for m in scen.truth), 0.05)
    assert val == pytest.approx(0.05 * (1.4 + 1.0 + 0.9 + 1.2), rel=1e-14)


def test_primal_objective_grid_mismatch():
    with pytest.raises(GridMismatch):
        primal_objective(MultiChannelSignal.zeros(GRID, 1), GridSignal.zeros(Grid(0, 1, 3)), 0.0, 1.0)


# -- Fenchel-Young ----------------------------------------------------------------

def test_fenchel_young_violated_triple():
    assert not fenchel_young_check(1.0, 0.0, 0.5)


def test_fenchel_young_infeasible_conjugate_is_infinite():
    assert fenchel_young_check(1e300, 0.0, 0.0, fstar_feasible=False)


@given(st.floats(-100, 100), st.floats(0.01, 10))
def test_fenchel_young_equality_for_soft_threshold_pairs(z, alpha):
    # x = prox_{alpha|.|}(z); its subgradient z - x is alpha sign(x), or z itself when x = 0
    x = float(np.sign(z) * max(abs(z) - alpha, 0.0))
    xs = alpha * float(np.sign(x)) if x != 0 else z
    assert abs(xs) <= alpha * (1 + 1e-15)
    pairing, f = x * xs, alpha * abs(x)
    assert fenchel_young_check(pairing, f, 0.0)
    assert abs(pairing - f) <= 1e-9 * (1 + abs(f))


@given(vectors, vectors)
def test_fenchel_young_for_quadratic(gamma, gamma_star):
    assert fenchel_young_check(gamma.inner(gamma_star), g_value(gamma), g_conj_value(gamma_star))
    assert gamma.inner(gamma) == pytest.approx(g_value(gamma) + g_conj_value(gamma), rel=1e-14,
                                               abs=1e-300)


# -- residual identity ------------------------------------------------------------

@given(vectors)
def test_residual_identity_examples(b):
    zero = MultiChannelSignal.zeros(GRID, 2)
    assert residual_identity_check(zero, b, b) == 0.0
    assert residual_identity_check(zero, GridSignal.zeros(GRID), b) == pytest.approx(b.norm(), rel=1e-14)


def test_residual_identity_grid_mismatch():
    with pytest.raises(GridMismatch):
        residual_identity_check(MultiChannelSignal.zeros(Grid(0, 1, 3), 1),
                                GridSignal.zeros(GRID), GridSignal.zeros(GRID))


# -- weak duality and feasibility scaling -----------------------------------------

@given(seeds, st.floats(0.01, 2.0))
def test_weak_duality_for_random_pairs(seed, alpha):
    r = np.random.default_rng(seed)
    b = GridSignal(GRID, r.standard_normal(GRID.count))
    nus = [random_measure(r, k=int(r.integers(0, 6))) for _ in PATTERNS]
    x = MultiChannelSignal.from_channels([forward(nu, y, GRID) for nu, y in zip(nus, PATTERNS)])
    primal = primal_objective(x, b, sum(tv_norm(nu) for nu in nus), alpha)
    dual_pt = DualPoint(GridSignal(GRID, r.standard_normal(GRID.count)), alpha).rescaled(PATTERNS)
    assert dual_pt.is_feasible(PATTERNS, feas_tol=1e-12)
    assert primal - dual_objective(dual_pt.r, b) >= -1e-9 * (1 + abs(primal))


@given(seeds, st.floats(0.01, 2.0))
def test_gap_report_is_nonnegative_for_valid_primal(seed, alpha):
    r = np.random.default_rng(seed)
    b = GridSignal(GRID, r.standard_normal(GRID.count))
    rep = gap_report(0.5 * b.norm() ** 2, b, b, PATTERNS, alpha)
    assert rep.gap >= -1e-9 * (1 + abs(rep.primal_value))
    assert rep.gap == rep.primal_value - rep.dual_value
    assert rep.max_violation == pytest.approx(max_certificate(b, PATTERNS) - alpha, rel=1e-14)


@given(seeds, st.floats(0.1, 5.0))
def test_rescaled_dual_point_sits_on_boundary(seed, alpha):
    r = np.random.default_rng(seed)
    pats = (RaisedCosine(0.2),)
    dp = DualPoint(GridSignal(GRID, 10 * r.standard_normal(GRID.count)), alpha)
    if dp.violation(pats) > 0:
        assert dp.rescaled(pats).violation(pats) == pytest.approx(0.0, abs=1e-12 * alpha)
    else:
        assert dp.rescaled(pats) is dp


def test_dual_point_requires_positive_alpha():
    with pytest.raises(ValueError):
        DualPoint(GridSignal.zeros(GRID), 0.0)


def test_gap_report_csv(tmp_path):
    b = GridSignal(GRID, np.sin(GRID.nodes))
    rep = gap_report(1.25, b * 0.1, b, PATTERNS, 0.5)
    rep.write_csv(tmp_path / "gap.csv")
    with open(tmp_path / "gap.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["primal", "dual", "gap", "max_violation"]
    assert [float(v) for v in rows[1]] == [rep.primal_value, rep.dual_value, rep.gap, rep.max_violation]


def test_fixed_point_gives_small_gap(fig1):
    # the fixed-point tolerance is in signal units relative to 1 + ||b||; the gap is
    # an objective value, so its natural scale is (1 + ||b||)^2
    from blassosep.baselines import tv_witness
    res, scen, cfg = fig1["result"], fig1["scenario"], fig1["cfg"]
    pats = fig1["spec"].patterns
    assert res.converged
    wit = tv_witness(res.x, pats, cfg.alpha)
    primal = primal_objective(wit.solution.channels(pats, scen.b.grid), scen.b, wit.tv, cfg.alpha)
    rep = gap_report(primal, res.r, scen.b, pats, cfg.alpha)
    assert 0 <= rep.gap <= 10 * cfg.fp_tol * (1 + scen.b.norm()) ** 2
