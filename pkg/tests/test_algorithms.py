import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qzopt import (
    CostModel,
    QgfmPlusParams,
    QueryLedger,
    SmoothingParams,
    catalog_make,
    derive_params_qgfm,
    derive_params_qgfm_plus,
    derive_params_qgm_plus,
    estimate_grad,
    estimate_grad_diff,
    grad_f_delta_ref,
    qgfm,
    qgfm_plus,
    qgm_plus,
    substream,
)

SPEC = catalog_make("abs-linear", 2, noise_scale=0.1)
SM = SmoothingParams(0.3)
X0 = np.full(2, 1.0 / math.sqrt(2))


def test_param_derivations():
    p = derive_params_qgfm(4, 1.0, 0.1, 0.1, 1.0)
    assert p.eta == 0.025 and p.T == 9600
    assert p.sigma1_sq == pytest.approx(0.005)
    p = derive_params_qgfm(1, 1.0, 1.0, 1.0, 0.0)
    assert (p.eta, p.T) == (0.5, 8)
    pp = derive_params_qgfm_plus(4, 1.0, 0.1, 0.1, 1.0)
    assert pp.T == 19219
    assert pp.p == pytest.approx(0.1 ** (2 / 3), abs=1e-15)
    assert pp.kappa == pytest.approx(0.1 ** (2 / 3) * 4 / 0.01, abs=1e-9)
    g = derive_params_qgm_plus(1.0, 1.0, 0.1, 1.0, 2)
    assert (g.eta, g.T) == (0.5, 887)
    assert g.p == pytest.approx(0.1 ** (2 / 3), abs=1e-15)


def test_param_derivation_errors():
    with pytest.raises(ValueError):
        derive_params_qgfm(0, 1.0, 0.1, 0.1, 1.0)
    with pytest.raises(ValueError):
        derive_params_qgfm(4, 1.0, 0.1, 0.0, 1.0)
    with pytest.raises(ValueError):
        derive_params_qgfm_plus(4, 1.0, 0.1, 2.0, 1.0)
    with pytest.raises(ValueError):
        derive_params_qgm_plus(1.0, 0.5, 0.6, 1.0, 2)
    # sigma = 0 is legal and turns every step into a refresh
    g0 = derive_params_qgm_plus(1.0, 0.0, 0.1, 1.0, 2)
    assert g0.p == 1.0 and g0.kappa == 0.0


def test_p_one_matches_plain_variant_bitwise():
    # with p=1 the variant refreshes every step, so the trajectories and
    # charges must coincide exactly, not just statistically
    qp = derive_params_qgfm(2, SPEC.L, 0.3, 0.4, SPEC.delta_0)
    qpp = QgfmPlusParams(eta=qp.eta, T=qp.T, p=1.0, sigma1_sq=qp.sigma1_sq, kappa=5.0)
    assert qp.T == 189
    for seed in (0, 1, 2):
        ra = qgfm(SPEC, X0, qp, SM, CostModel(), seed)
        rb = qgfm_plus(SPEC, X0, qpp, SM, CostModel(), seed)
        assert np.array_equal(ra.x_out, rb.x_out)
        assert ra.ledger.uf_queries == rb.ledger.uf_queries == 3024
        assert ra.ledger.classical_queries == rb.ledger.classical_queries
        assert ra.residual.estimate == rb.residual.estimate


def test_recursion_tracks_smoothed_gradient():
    # teacher-forced trajectory crossing the kink: the g recursion stays an
    # unbiased estimate of grad f_delta at the current iterate
    traj = [np.array([0.8, 0.1]), np.array([0.6, 0.05]),
            np.array([0.4, 0.0]), np.array([0.15, -0.05])]
    pp = derive_params_qgfm_plus(2, SPEC.L, 0.3, 0.4, SPEC.delta_0)
    s1 = math.sqrt(pp.sigma1_sq)
    model = CostModel()
    N = 10_000
    acc = np.zeros((N, 2))
    for r in range(N):
        rng = substream(9, "tf", r)
        led = QueryLedger()
        g = estimate_grad(SPEC, traj[0], SM, s1, model, rng, led).value
        for t in range(3):
            if rng.uniform() < pp.p:
                g = estimate_grad(SPEC, traj[t + 1], SM, s1, model, rng, led).value
            else:
                s2 = math.sqrt(pp.kappa) * float(np.linalg.norm(traj[t + 1] - traj[t]))
                g = g + estimate_grad_diff(SPEC, traj[t + 1], traj[t], SM, s2,
                                           model, rng, led).value
        acc[r] = g
    mean = acc.mean(axis=0)
    se = acc.std(axis=0, ddof=1) / math.sqrt(N)
    ref, ref_se = grad_f_delta_ref(SPEC, traj[3], SM, 4_000_000, substream(9, "tfref"))
    z = np.abs(mean - ref) / np.sqrt(se**2 + ref_se**2)
    assert np.all(z < 4.0)
    assert_allclose(mean, [0.21096845, 0.2132286], atol=1e-7)


def _phi_stat(results, eta, eps):
    per_seed = []
    for res in results:
        dphi = np.diff([r.phi for r in res.trace])
        gref = np.array([r.gradref_norm for r in res.trace][:-1])
        per_seed.append(float(np.mean(dphi + 0.5 * eta * gref**2 - 0.5 * eta * eps**2)))
    a = np.array(per_seed)
    return a.mean(), a.std(ddof=1) / math.sqrt(len(a))


def test_phi_descent_qgfm():
    qp = derive_params_qgfm(2, SPEC.L, 0.3, 0.4, SPEC.delta_0)
    runs = [qgfm(SPEC, X0, qp, SM, CostModel(), s, trace=True, trace_ref_n=4000)
            for s in range(20)]
    m, s = _phi_stat(runs, qp.eta, 0.4)
    assert m <= 3 * s
    assert -0.0112 < m < -0.0104


def test_phi_descent_qgfm_plus():
    pp = derive_params_qgfm_plus(2, SPEC.L, 0.3, 0.4, SPEC.delta_0)
    assert pp.T == 385
    runs = [qgfm_plus(SPEC, X0, pp, SM, CostModel(), s, trace=True, trace_ref_n=4000)
            for s in range(20)]
    m, s = _phi_stat(runs, pp.eta, 0.4)
    assert m <= 3 * s
    assert -0.0100 < m < -0.0092


def test_phi_descent_qgm_plus():
    qspec = catalog_make("quadratic-smooth", 2, noise_scale=1.0)
    gp = derive_params_qgm_plus(qspec.smooth_params[0], qspec.smooth_params[1], 0.4,
                                qspec.delta_0, 2)
    assert gp.T == 89
    runs = [qgm_plus(qspec, X0, gp, CostModel(), s, trace=True) for s in range(20)]
    m, s = _phi_stat(runs, gp.eta, 0.4)
    assert m <= 3 * s
    assert -0.0205 < m < -0.0165


def test_cost_mode_changes_charges_not_iterates():
    qp = derive_params_qgfm(2, SPEC.L, 0.3, 0.4, SPEC.delta_0)
    rq = qgfm(SPEC, X0, qp, SM, CostModel(mode="quantum"), 5)
    rc = qgfm(SPEC, X0, qp, SM, CostModel(mode="classical"), 5)
    assert np.array_equal(rq.x_out, rc.x_out)
    assert rq.residual.estimate == rc.residual.estimate
    s1 = math.sqrt(qp.sigma1_sq)
    assert rq.ledger.uf_queries == qp.T * 2 * max(1, math.ceil(2 * SPEC.L / s1)) == 3024
    n1 = max(1, math.ceil(SPEC.est_var_coeff * 2 * SPEC.L**2 / qp.sigma1_sq))
    assert rc.ledger.classical_queries == qp.T * 2 * n1 == 9450
    assert rq.ledger.classical_queries == 0 and rc.ledger.uf_queries == 0


def test_noiseless_smooth_descent_is_monotone():
    q0 = catalog_make("quadratic-smooth", 2, noise_scale=0.0)
    gp = derive_params_qgm_plus(q0.smooth_params[0], 0.0, 0.1, q0.delta_0, 2)
    assert gp.p == 1.0 and gp.kappa == 0.0 and gp.T == 1200
    res = qgm_plus(q0, X0, gp, CostModel(), 0, trace=True)
    phis = np.array([r.phi for r in res.trace])
    assert phis[0] == pytest.approx(0.75)
    assert phis[-1] < 1e-100
    assert np.all(np.diff(phis) <= 1e-12)
    assert res.residual.estimate <= 0.1
    assert res.residual.half_width == 0.0


def test_constant_objective_degeneracies():
    cspec = catalog_make("constant", 3, noise_scale=0.0)
    cp = derive_params_qgfm(3, cspec.L, 0.3, 0.4, cspec.delta_0)
    assert cp.T == 1
    res = qgfm(cspec, np.zeros(3), cp, SM, CostModel(), 0)
    assert np.array_equal(res.x_out, np.zeros(3))
    assert res.residual.estimate == 0.0
    cpp = derive_params_qgfm_plus(3, cspec.L, 0.3, 0.25 * cspec.L, cspec.delta_0)
    rp = qgfm_plus(cspec, np.zeros(3), cpp, SM, CostModel(), 0, trace=True)
    # every tail step has zero displacement, so no difference charges accrue
    assert sum(1 for r in rp.trace if r.theta == 0) == 264
    assert rp.ledger.phase_tags.get("diff", (0, 0, 0)) == (0, 0, 0)
    assert rp.residual.estimate == 0.0


def test_budget_abort():
    sspec = catalog_make("sawtooth", 4, noise_scale=0.1)
    bp = derive_params_qgfm(4, sspec.L, 0.1, 0.1, sspec.delta_0)
    assert bp.T == 9600
    res = qgfm(sspec, np.full(4, 0.5), bp, SmoothingParams(0.1),
               CostModel(mode="classical"), 0, budget=5000)
    assert res.budget_exceeded
    assert res.ledger.classical_queries == 6400


def test_x0_shape_and_missing_smooth_oracle():
    qp = derive_params_qgfm(2, SPEC.L, 0.3, 0.4, SPEC.delta_0)
    with pytest.raises(ValueError):
        qgfm(SPEC, np.zeros(3), qp, SM, CostModel(), 0)
    gp = derive_params_qgm_plus(1.0, 0.0, 0.1, 1.0, 2)
    with pytest.raises(ValueError):
        qgm_plus(catalog_make("sawtooth", 2), np.zeros(2), gp, CostModel(), 0)


def test_trace_charges_sum_to_ledger():
    # per-iteration deltas in the trace (init absorbed into t=0) must
    # reconstruct the ledger totals exactly
    pp = derive_params_qgfm_plus(2, SPEC.L, 0.3, 0.4, SPEC.delta_0)
    for seed in (0, 4):
        res = qgfm_plus(SPEC, X0, pp, SM, CostModel(), seed, trace=True)
        assert sum(r.uf for r in res.trace) == res.ledger.uf_queries
        assert sum(r.classical for r in res.trace) == res.ledger.classical_queries
        assert sum(r.grad for r in res.trace) == res.ledger.grad_oracle_queries
    qspec = catalog_make("quadratic-smooth", 2, noise_scale=1.0)
    gp = derive_params_qgm_plus(qspec.smooth_params[0], qspec.smooth_params[1], 0.4,
                                qspec.delta_0, 2)
    res = qgm_plus(qspec, X0, gp, CostModel(), 3, trace=True)
    assert sum(r.grad for r in res.trace) == res.ledger.grad_oracle_queries
