import math

import numpy as np
import pytest

from qzopt import (
    CostModel,
    QueryLedger,
    SmoothingParams,
    catalog_make,
    estimate_grad,
    estimate_grad_diff,
    estimate_sgrad,
    estimate_sgrad_diff,
    grad_f_delta_ref,
    o_delta_g,
    o_g_delta,
    quantum_mean_cost,
    substream,
)
from qzopt.objectives import _sample_xi_batch
from qzopt.smoothing import _g_delta_rows, _sphere_batch

SM = SmoothingParams(0.1)


def test_cost_model_validation():
    assert CostModel().mode == "quantum"
    with pytest.raises(ValueError):
        CostModel(mode="hybrid")
    with pytest.raises(ValueError):
        CostModel(c_q=0.0)
    with pytest.raises(ValueError):
        CostModel(log_factor_policy="verbose")
    with pytest.raises(ValueError):
        CostModel(log_k=-1)
    assert CostModel().log_multiplier(0.01) == 1
    assert CostModel(log_factor_policy="explicit", log_k=1).log_multiplier(0.25) == 2
    assert CostModel(log_factor_policy="explicit", log_k=2).log_multiplier(0.25) == 4
    # sigma_hat >= 1 floors at a unit multiplier
    assert CostModel(log_factor_policy="explicit", log_k=3).log_multiplier(2.0) == 1


def test_ledger_charge_and_merge():
    a = QueryLedger()
    a.charge(uf=2, phase="init")
    a.charge(uf=4, classical=6, phase="refresh")
    assert (a.uf_queries, a.classical_queries, a.grad_oracle_queries) == (6, 6, 0)
    assert a.phase_tags == {"init": (2, 0, 0), "refresh": (4, 6, 0)}

    b = QueryLedger()
    b.charge(classical=1, grad=5, phase="refresh")
    ab, ba = a + b, b + a
    assert ab == ba
    assert ab.uf_queries == 6 and ab.classical_queries == 7 and ab.grad_oracle_queries == 5
    assert ab.phase_tags["refresh"] == (4, 7, 5)
    c = QueryLedger()
    c.charge(uf=9)
    assert (a + b) + c == a + (b + c)
    with pytest.raises(ValueError):
        a.charge(uf=-1)


def test_phase_tags_sum_to_totals():
    led = QueryLedger()
    rng = substream(0, "phases")
    spec = catalog_make("sawtooth", 3)
    estimate_grad(spec, np.zeros(3), SM, 0.5, CostModel(), rng, led, phase="init")
    estimate_grad(spec, np.ones(3), SM, 0.5, CostModel(), rng, led, phase="refresh")
    estimate_grad_diff(spec, np.ones(3), np.zeros(3), SM, 0.5, CostModel(), rng, led,
                       phase="diff")
    sums = np.sum(list(led.phase_tags.values()), axis=0)
    assert tuple(sums) == (led.uf_queries, led.classical_queries, led.grad_oracle_queries)


def test_single_draw_charges():
    spec = catalog_make("constant", 3)
    led = QueryLedger()
    rng = substream(1, "draws")
    g = o_g_delta(spec, np.zeros(3), SM, rng, led)
    np.testing.assert_array_equal(g, np.zeros(3))
    assert led.uf_queries == 2
    o_g_delta(spec, np.zeros(3), SM, rng, led)
    assert led.uf_queries == 4

    dg = o_delta_g(spec, np.ones(3), np.zeros(3), SM, rng, led)
    np.testing.assert_array_equal(dg, np.zeros(3))
    assert led.uf_queries == 8

    cled = QueryLedger()
    o_g_delta(spec, np.zeros(3), SM, rng, cled, CostModel(mode="classical"))
    assert (cled.uf_queries, cled.classical_queries) == (0, 2)


def test_single_draw_unbiased():
    # mean over 1e5 fresh draws vs the MC reference, 4 combined SEs
    spec = catalog_make("abs-linear", 2)
    x = np.array([0.05, -0.02])
    led = QueryLedger()
    rng = substream(2, "unb")
    draws = np.array([o_g_delta(spec, x, SM, rng, led) for _ in range(10**5)])
    se = draws.std(axis=0, ddof=1) / math.sqrt(len(draws))
    ref, ref_se = grad_f_delta_ref(spec, x, SM, 4 * 10**5, substream(2, "unbref"))
    assert np.all(np.abs(draws.mean(axis=0) - ref) <= 4 * np.sqrt(se**2 + ref_se**2))


def test_delta_g_shares_the_draw():
    spec = catalog_make("sawtooth", 3, noise_scale=0.2)
    x, y = np.array([0.3, 0.1, 0.7]), np.array([0.2, 0.4, 0.6])
    led = QueryLedger()
    got = o_delta_g(spec, x, y, SM, substream(3, "shared"), led)
    # replay the identical stream by hand: same (w, xi) must be reused
    rng = substream(3, "shared")
    W = _sphere_batch(3, 1, rng)
    payload = _sample_xi_batch(spec, 1, rng)
    want = (_g_delta_rows(spec, x, SM.delta, W, payload)
            - _g_delta_rows(spec, y, SM.delta, W, payload))[0]
    np.testing.assert_array_equal(got, want)
    np.testing.assert_array_equal(
        o_delta_g(spec, x, x, SM, substream(3, "shared"), led), np.zeros(3))


def test_quantum_mean_cost_formula():
    assert quantum_mean_cost(2.0, 4, 0.5, CostModel()) == 8
    assert quantum_mean_cost(0.0, 4, 0.5, CostModel()) == 1
    c1 = quantum_mean_cost(3.7, 5, 0.2, CostModel())
    c2 = quantum_mean_cost(3.7, 5, 0.4, CostModel())
    assert c2 <= c1 and c1 <= 2 * c2 + 1
    assert quantum_mean_cost(2.0, 4, 1.0, CostModel(mode="classical")) == 4
    assert quantum_mean_cost(2.0, 4, 1.0, CostModel(mode="classical"), d_mult=3) == 12
    with pytest.raises(ValueError):
        quantum_mean_cost(2.0, 4, 0.0, CostModel())


def test_estimate_grad_charges_and_floor():
    spec = catalog_make("abs-linear", 4)
    led = QueryLedger()
    # certified batch coefficient for the catalog entry is 1.0, so
    # sigma_hat >= L*sqrt(d) floors the batch at a single draw
    est = estimate_grad(spec, spec.x0, SM, 2.0 * 2.0, CostModel(), substream(4, "floor"), led)
    single = o_g_delta(spec, spec.x0, SM, substream(4, "floor"), QueryLedger())
    np.testing.assert_array_equal(est.value, single)
    assert led.uf_queries == 2 and est.kind == "grad"

    czero = estimate_grad(catalog_make("constant", 3), np.zeros(3), SM, 1e-6,
                          CostModel(), substream(4, "c"), led)
    np.testing.assert_array_equal(czero.value, np.zeros(3))

    # quantum charge 2*ceil(c_q d L / sigma), classical 2n; deterministic
    q = QueryLedger()
    estimate_grad(spec, spec.x0, SM, 0.3, CostModel(c_q=2.0), substream(4, "q"), q)
    assert q.uf_queries == 2 * math.ceil(2.0 * 4 * 1.0 / 0.3)
    cl = QueryLedger()
    estimate_grad(spec, spec.x0, SM, 0.3, CostModel(mode="classical"), substream(4, "q"), cl)
    assert cl.classical_queries == 2 * math.ceil(4 * 1.0 / 0.09)
    with pytest.raises(ValueError):
        estimate_grad(spec, spec.x0, SM, 0.0, CostModel(), substream(4, "q"), q)


@pytest.mark.parametrize("mult", [1.0, 0.3, 0.1, 0.01])
def test_estimate_grad_mse_contract(mult):
    # target sd spans two orders of magnitude
    spec = catalog_make("abs-linear", 4)
    x = np.array([0.9, -0.3, 0.4, 0.2])
    sigma = mult * spec.L * math.sqrt(spec.d)
    reps = 2000 if mult >= 0.1 else 500
    ref, _ = grad_f_delta_ref(spec, x, SM, 10**6, substream(5, "mseref"))
    acc = 0.0
    led = QueryLedger()
    rng = substream(5, "mse", int(mult * 1000))
    for _ in range(reps):
        e = estimate_grad(spec, x, SM, sigma, CostModel(), rng, led)
        acc += float(np.sum((e.value - ref) ** 2))
    assert acc / reps <= sigma**2 * (1.0 + 5.0 / math.sqrt(reps))


def test_estimate_grad_diff_degenerate_and_charge():
    spec = catalog_make("abs-linear", 2)
    led = QueryLedger()
    z = estimate_grad_diff(spec, np.ones(2), np.ones(2), SM, 0.5, CostModel(),
                           substream(6, "dg"), led)
    np.testing.assert_array_equal(z.value, np.zeros(2))
    assert z.queries_charged == 0 and led.uf_queries == 0

    x = np.array([1.0, 0.0])
    y = np.array([1.0, 0.1])
    est = estimate_grad_diff(spec, x, y, SM, 1.0, CostModel(), substream(6, "dg"), led)
    assert est.queries_charged == 12 and led.uf_queries == 12  # 4*ceil(2^1.5*0.1/0.1)
    with pytest.raises(ValueError):
        estimate_grad_diff(spec, x, y, SM, 0.0, CostModel(), substream(6, "dg"), led)


def test_estimate_grad_diff_unbiased():
    spec = catalog_make("sawtooth", 2, noise_scale=0.1)
    x, y = np.array([0.42, 0.17]), np.array([0.35, 0.22])
    rng = substream(7, "dgu")
    led = QueryLedger()
    reps = 10**4
    draws = np.array([estimate_grad_diff(spec, x, y, SM, 1.0, CostModel(), rng, led).value
                      for _ in range(reps)])
    se = draws.std(axis=0, ddof=1) / math.sqrt(reps)
    rx, sx = grad_f_delta_ref(spec, x, SM, 10**6, substream(7, "dgux"))
    ry, sy = grad_f_delta_ref(spec, y, SM, 10**6, substream(7, "dguy"))
    z = np.abs(draws.mean(axis=0) - (rx - ry)) / np.sqrt(se**2 + sx**2 + sy**2)
    assert np.all(z <= 4.0)


def test_estimate_sgrad():
    spec = catalog_make("quadratic-smooth", 4, noise_scale=1.0)
    led = QueryLedger()
    est = estimate_sgrad(spec, spec.x0, 0.5, CostModel(), substream(8, "sg"), led)
    assert est.queries_charged == 4 and led.grad_oracle_queries == 4
    cl = QueryLedger()
    estimate_sgrad(spec, spec.x0, 0.5, CostModel(mode="classical"), substream(8, "sg"), cl)
    assert cl.grad_oracle_queries == 4  # n = ceil(sigma^2/sigma_hat^2)

    exact = catalog_make("quadratic-smooth", 4)
    led2 = QueryLedger()
    e = estimate_sgrad(exact, exact.x0, 0.5, CostModel(), substream(8, "sg0"), led2)
    np.testing.assert_allclose(e.value, exact.lambdas * exact.x0, atol=1e-15)
    assert e.queries_charged == 1
    with pytest.raises(ValueError):
        estimate_sgrad(catalog_make("sawtooth", 2), np.zeros(2), 0.5, CostModel(),
                       substream(8, "sg"), led)


def test_estimate_sgrad_mean_and_contract():
    spec = catalog_make("quadratic-smooth", 3, noise_scale=1.0)
    x = np.array([0.2, -0.4, 0.6])
    rng = substream(9, "sgm")
    led = QueryLedger()
    reps = 10**4
    sigma_hat = 0.4
    draws = np.array([estimate_sgrad(spec, x, sigma_hat, CostModel(), rng, led).value
                      for _ in range(reps)])
    tgt = spec.lambdas * x
    se = draws.std(axis=0, ddof=1) / math.sqrt(reps)
    assert np.all(np.abs(draws.mean(axis=0) - tgt) <= 4 * se)
    mse = float(np.mean(np.sum((draws - tgt) ** 2, axis=1)))
    assert mse <= sigma_hat**2 * (1.0 + 5.0 / math.sqrt(reps))


def test_estimate_sgrad_diff():
    spec = catalog_make("quadratic-smooth", 4, noise_scale=1.0)
    led = QueryLedger()
    z = estimate_sgrad_diff(spec, spec.x0, spec.x0, 0.1, CostModel(), substream(10, "sd"), led)
    assert z.queries_charged == 0
    np.testing.assert_array_equal(z.value, np.zeros(4))

    x = spec.x0
    y = spec.x0 + np.array([0.2, 0.0, 0.0, 0.0])
    est = estimate_sgrad_diff(spec, x, y, 0.1, CostModel(c_q=1.0), substream(10, "sd"), led)
    assert est.queries_charged == 8  # ceil(sqrt(4)*l*0.2/0.1) with l = 2
    # shared-noise difference on the quadratic is deterministic and exact
    np.testing.assert_allclose(est.value, spec.lambdas * (x - y), atol=1e-15)
    cl = QueryLedger()
    e2 = estimate_sgrad_diff(spec, x, y, 0.1, CostModel(mode="classical"),
                             substream(10, "sd"), cl)
    assert e2.queries_charged == math.ceil(2.0**2 * 0.04 / 0.01)

    # unit-curvature instance reproduces the textbook charge ceil(2*0.2/0.1)
    from qzopt import ObjectiveSpec
    unit = ObjectiveSpec(name="quadratic-smooth", d=4, L=1.0, noise_kind="none",
                         noise_scale=0.0, f_star=0.0, delta_0=0.0,
                         has_closed_f_delta=True, x0=np.zeros(4),
                         smooth_params=(1.0, 1.0), lambdas=np.ones(4))
    e3 = estimate_sgrad_diff(unit, x, y, 0.1, CostModel(), substream(10, "sd1"),
                             QueryLedger())
    assert e3.queries_charged == 4


def test_explicit_log_policy_scales_charges():
    spec = catalog_make("abs-linear", 2)
    base, logged = QueryLedger(), QueryLedger()
    estimate_grad(spec, spec.x0, SM, 0.25, CostModel(), substream(11, "lg"), base)
    estimate_grad(spec, spec.x0, SM, 0.25,
                  CostModel(log_factor_policy="explicit", log_k=1),
                  substream(11, "lg"), logged)
    assert logged.uf_queries == 2 * base.uf_queries  # ceil(log2(4)) = 2
