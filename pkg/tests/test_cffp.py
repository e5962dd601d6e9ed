import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st_

from airis import ChannelSet, CffpState, Scenario, generate
from airis.cffp import (
    BudgetExhausted,
    CffpVariant,
    combined_channel,
    initial_cffp_state,
    run_max_ar_cffp,
    surrogate_value,
    update_gamma,
    update_mu,
    update_theta_cffp,
    update_v1,
    varpi_of,
)
from airis.model import link_terms, snr_no_pa, total_power_no_pa
from conftest import crandn, random_channel, unit, unit_scenario
from oracles import cffp_surrogate, gamma_grid_max, total_power_no_pa_dense, trust_region_pg

PF, SF = CffpVariant.PAPER_FAITHFUL, CffpVariant.STANDARD_FP
VARIANTS = [PF, SF]


def _random_state(rng, scn, ch, gamma=0.7):
    v1 = 0.4 * unit(crandn(rng, ch.m))
    theta = 0.3 * crandn(rng, ch.n)
    mu = complex(crandn(rng, 1)[0])
    return CffpState(v1, theta, mu, gamma)


def test_variant_parse():
    assert CffpVariant.parse("PaperFaithful") is PF
    assert CffpVariant.parse("standard-fp") is SF
    assert CffpVariant.parse(SF) is SF
    with pytest.raises(ValueError):
        CffpVariant.parse("other")


def test_surrogate_matches_oracle(rng):
    scn = unit_scenario(n=5)
    ch = random_channel(rng, 2, 5)
    for variant in VARIANTS:
        st = _random_state(rng, scn, ch)
        want = cffp_surrogate(scn.sigma2_irs, scn.sigma2_user, ch.g, ch.f, ch.h, st.v1, st.theta, st.mu, st.gamma,
                              standard=variant is SF)
        assert surrogate_value(scn, ch, st, variant) == pytest.approx(want, rel=1e-12)
        assert surrogate_value(scn, ch, CffpState(st.v1, st.theta), variant) == 0.0


def test_mu_examples(rng):
    scn = unit_scenario(n=4)
    ch = random_channel(rng, 2, 4)
    v1 = unit(crandn(rng, 2))
    # c = 0 when the beam is orthogonal to the combined channel
    ch_real = ChannelSet(ch.g, ch.f, np.array([1.0, 0.0]))
    assert update_mu(scn, ch_real, CffpState(np.array([0.0, 0.5]), np.zeros(4))) == 0
    r = combined_channel(ch, np.zeros(4))
    v_perp = np.array([-np.conj(r[1]), np.conj(r[0])])
    assert abs(update_mu(scn, ch, CffpState(v_perp, np.zeros(4)))) <= 1e-15
    st = CffpState(v1, np.zeros(4))
    assert update_mu(scn, ch, st, PF) == pytest.approx(np.vdot(ch.h, v1) / scn.sigma2_user, rel=1e-12)


@pytest.mark.parametrize("variant", VARIANTS)
def test_mu_is_stationary(rng, variant):
    scn = unit_scenario(n=5)
    ch = random_channel(rng, 2, 5)
    for _ in range(5):
        st = _random_state(rng, scn, ch, gamma=rng.uniform(0, 3))
        mu = update_mu(scn, ch, st, variant)
        h = 1e-6

        def s(z):
            return surrogate_value(scn, ch, CffpState(st.v1, st.theta, z, st.gamma), variant)

        gr = (s(mu + h) - s(mu - h)) / (2 * h)
        gi = (s(mu + 1j * h) - s(mu - 1j * h)) / (2 * h)
        scale = 1 + abs(s(mu)) + abs(mu)
        assert math.hypot(gr, gi) <= 1e-5 * scale
        # a maximum, not just a stationary point
        assert s(mu) >= s(mu * 1.01) and s(mu) >= s(mu * 1j ** 0.02)


def test_gamma_examples():
    assert update_gamma(None, 0.0) == 0.0
    assert update_gamma(None, -1.5) == 0.0
    assert update_gamma(None, 2.0) == pytest.approx(2 + 2 * math.sqrt(2), abs=1e-12)
    assert update_gamma(None, 2.0) == pytest.approx(gamma_grid_max(2.0), abs=1e-4)


@given(st_.floats(min_value=1e-6, max_value=1e3))
@settings(max_examples=200, deadline=None)
def test_gamma_is_stationary(varpi):
    g = update_gamma(None, varpi)
    resid = 1 / (1 + g) - 1 + varpi / math.sqrt(1 + g)
    assert abs(resid) <= 1e-8 * max(1.0, varpi)


def test_tightness_standard_fp(rng):
    scn = unit_scenario(n=5)
    ch = random_channel(rng, 2, 5)
    for _ in range(10):
        st = _random_state(rng, scn, ch)
        snr = snr_no_pa(scn, ch, st)
        st = CffpState(st.v1, st.theta, st.mu, snr)
        st = CffpState(st.v1, st.theta, update_mu(scn, ch, st, SF), st.gamma)
        g = update_gamma(st, varpi_of(ch, st))
        assert g == pytest.approx(snr, rel=1e-10)  # fixed point
        st = CffpState(st.v1, st.theta, st.mu, g)
        want = math.log1p(snr)
        assert abs(surrogate_value(scn, ch, st, SF) - want) <= 1e-9 * (1 + abs(want))


def test_paper_faithful_value_after_mu(rng):
    scn = unit_scenario(n=5)
    ch = random_channel(rng, 2, 5)
    st = _random_state(rng, scn, ch, gamma=1.3)
    st = CffpState(st.v1, st.theta, update_mu(scn, ch, st, PF), st.gamma)
    c, noise, _ = link_terms(ch, st.v1, st.theta)
    den = scn.sigma2_irs * noise + scn.sigma2_user
    g = st.gamma
    want = math.log1p(g) - g + (1 + g) * abs(c) ** 2 / den
    assert surrogate_value(scn, ch, st, PF) == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("variant", VARIANTS)
def test_v1_mrt_when_irs_off(rng, variant):
    scn = unit_scenario(n=4)
    ch = random_channel(rng, 2, 4)
    st = CffpState(unit(crandn(rng, 2)) * 0.3, np.zeros(4), 0.8 + 0.2j, 0.5)
    v1, rep = update_v1(scn, ch, st, variant)
    if variant is PF:
        np.testing.assert_allclose(v1, math.sqrt(scn.p_max) * unit(ch.h) * (st.mu / abs(st.mu)), atol=1e-10)
    else:
        # the rank-one penalty may stop short of the budget, but the beam stays along h
        assert abs(abs(np.vdot(unit(ch.h), v1)) - np.linalg.norm(v1)) <= 1e-10
        assert np.linalg.norm(v1) ** 2 <= scn.p_max * (1 + 1e-9)
    assert rep is not None


@pytest.mark.parametrize("variant", VARIANTS)
def test_v1_zero_mu_keeps_beam(rng, variant):
    scn = unit_scenario(n=4)
    ch = random_channel(rng, 2, 4)
    st = CffpState(unit(crandn(rng, 2)) * 0.3, 0.1 * crandn(rng, 4), 0j, 0.5)
    v1, rep = update_v1(scn, ch, st, variant)
    np.testing.assert_array_equal(v1, st.v1)
    assert rep is None


def test_v1_saturates_and_respects_budget(rng):
    for _ in range(10):
        scn = unit_scenario(n=6)
        ch = random_channel(rng, 2, 6)
        st = _random_state(rng, scn, ch)
        v1, _ = update_v1(scn, ch, st, PF)
        theta = st.theta
        gt = ch.g * np.abs(theta)[:, None]
        H = np.eye(2) + gt.conj().T @ gt
        p_r = scn.p_max - scn.sigma2_irs * np.vdot(theta, theta).real
        assert np.vdot(v1, H @ v1).real == pytest.approx(p_r, rel=1e-9)
        total = total_power_no_pa_dense(scn.sigma2_irs, ch.g, v1, theta)
        assert total <= scn.p_max * (1 + 1e-9)


def test_v1_budget_errors(rng):
    scn = unit_scenario(n=4)
    ch = random_channel(rng, 2, 4)
    st = CffpState(0.1 * unit(crandn(rng, 2)), 10 * np.ones(4), 1.0, 0.0)
    with pytest.raises(BudgetExhausted):
        update_v1(scn, ch, st)
    st = CffpState(2 * unit(crandn(rng, 2)), np.ones(4), 1.0, 0.0)
    with pytest.raises(BudgetExhausted):
        update_theta_cffp(scn, ch, st)


def test_theta_examples(rng):
    scn = unit_scenario(n=5)
    ch = random_channel(rng, 2, 5)
    st = CffpState(0.4 * unit(crandn(rng, 2)), 0.1 * crandn(rng, 5), 0j, 0.3)
    theta, _ = update_theta_cffp(scn, ch, st)
    assert not np.any(theta)
    f = np.zeros(5, complex)
    f[2] = 1.3 - 0.4j
    ch1 = ChannelSet(ch.g, f, ch.h)
    for variant in VARIANTS:
        st = CffpState(st.v1, st.theta, 0.9 - 0.1j, 0.3)
        theta, _ = update_theta_cffp(scn, ch1, st, variant)
        assert np.count_nonzero(np.abs(theta) > 1e-12) == 1 and abs(theta[2]) > 0


def _theta_problem(scn, ch, st, variant):
    """Unnormalized QCQP data for the IRS step, written out from the surrogate."""
    gv = ch.g @ st.v1
    a = np.conj(ch.f) * gv
    s = math.sqrt(1 + st.gamma)
    mu2 = abs(st.mu) ** 2
    q = s * np.conj(st.mu) * a
    A = mu2 * scn.sigma2_irs * np.diag(np.abs(ch.f) ** 2)
    if variant is SF:
        A = A + mu2 * np.outer(a, a.conj())
        q = q - mu2 * np.conj(np.vdot(ch.h, st.v1)) * a
    B = np.diag(np.abs(gv) ** 2 + scn.sigma2_irs)
    return q, A, B, scn.p_max - np.vdot(st.v1, st.v1).real


@pytest.mark.parametrize("variant", VARIANTS)
def test_theta_matches_oracle(rng, variant):
    for k in range(4):
        scn = unit_scenario(n=6)
        ch = random_channel(rng, 2, 6)
        st = _random_state(rng, scn, ch)
        q, A, B, p_b = _theta_problem(scn, ch, st, variant)
        theta, _ = update_theta_cffp(scn, ch, st, variant)
        _, best = trust_region_pg(q, A, B, p_b, iters=6000, restarts=2, seed=k)
        got = 2 * np.vdot(q, theta).real - np.vdot(theta, A @ theta).real
        assert got >= best - 1e-6 * abs(best)
        assert np.vdot(theta, B @ theta).real <= p_b * (1 + 1e-9)
        # the surrogate difference equals the QCQP objective difference
        new = CffpState(st.v1, theta, st.mu, st.gamma)
        d_sur = surrogate_value(scn, ch, new, variant) - surrogate_value(scn, ch, st, variant)
        old = 2 * np.vdot(q, st.theta).real - np.vdot(st.theta, A @ st.theta).real
        assert d_sur == pytest.approx(got - old, rel=1e-8, abs=1e-10)


def test_initial_state(default32):
    scn, ch = default32
    st = initial_cffp_state(scn, ch)
    assert np.vdot(st.v1, st.v1).real == pytest.approx(scn.p_max / 2, rel=1e-12)
    assert total_power_no_pa(scn, ch, st) == pytest.approx(scn.p_max, rel=1e-12)


@pytest.mark.parametrize("variant", VARIANTS)
def test_no_irs_path_reduces_to_mrt(rng, variant):
    scn = unit_scenario(n=4)
    h = crandn(rng, 2)
    ch = ChannelSet(np.zeros((4, 2)), np.zeros(4), h)
    st, tr = run_max_ar_cffp(scn, ch, variant=variant)
    assert tr.converged
    assert not np.any(st.theta)
    want = math.log2(1 + scn.p_max * np.vdot(h, h).real / scn.sigma2_user)
    assert tr.ar[-1] == pytest.approx(want, abs=1e-6)
    assert abs(abs(np.vdot(unit(h), st.v1)) - math.sqrt(scn.p_max)) <= 1e-6


def test_infeasible_init_rejected(rng):
    scn = unit_scenario(n=4)
    ch = random_channel(rng, 2, 4)
    with pytest.raises(ValueError):
        run_max_ar_cffp(scn, ch, init=CffpState(3 * unit(crandn(rng, 2)), np.zeros(4)))


def _check_trace(scn, tr, variant):
    prev = tr.iterates[0].surrogate_value
    for it in tr.iterates[1:]:
        vals = [prev, *it.block_values]
        for a, b in zip(vals, vals[1:]):
            assert b >= a - 1e-8 * (1 + abs(a))
        prev = it.surrogate_value
        assert it.total_power <= scn.p_max * (1 + 1e-9)
    if variant is SF:
        ar = tr.ar
        assert all(b >= a - 1e-8 for a, b in zip(ar, ar[1:]))


@pytest.mark.parametrize("variant", VARIANTS)
def test_block_ascent_random_instances(rng, variant):
    for _ in range(5):
        scn = unit_scenario(n=6)
        ch = random_channel(rng, 2, 6)
        _, tr = run_max_ar_cffp(scn, ch, variant=variant, max_iters=60)
        _check_trace(scn, tr, variant)


@pytest.mark.parametrize("variant", VARIANTS)
def test_block_ascent_default_setup(variant):
    scn = Scenario(n_elements=32)
    for seed in range(5):
        _, tr = run_max_ar_cffp(scn, generate(scn, seed), variant=variant)
        _check_trace(scn, tr, variant)


def test_standard_fp_tightness_along_run(default32):
    scn, ch = default32
    _, tr = run_max_ar_cffp(scn, ch, variant=SF)
    assert tr.converged
    for prev, it in zip(tr.iterates, tr.iterates[1:]):
        want = prev.ar_bits * math.log(2)
        assert abs(it.block_values[1] - want) <= 1e-9 * (1 + abs(want))


def test_overflow_stop_keeps_finite_state():
    scn = Scenario(n_elements=128)
    stopped = 0
    for seed in range(10):
        st, tr = run_max_ar_cffp(scn, generate(scn, seed), variant=PF)
        assert math.isfinite(tr.ar[-1]) and math.isfinite(st.gamma)
        if tr.meta["stopped"] == "auxiliary_overflow":
            stopped += 1
            assert not tr.converged
    print(f"paper_faithful auxiliary overflow on {stopped}/10 seeds")


def _default128_convergence(variant):
    scn = Scenario(n_elements=128)
    hits, iters = 0, []
    for seed in range(50):
        _, tr = run_max_ar_cffp(scn, generate(scn, seed), variant=variant)
        hits += tr.converged and tr.iterations <= 50
        iters.append(tr.iterations)
    return hits, float(np.mean(iters))


@pytest.mark.slow
def test_standard_fp_default_setup_converges():
    hits, mean_iters = _default128_convergence(SF)
    print(f"standard_fp converged within 50 iterations on {hits}/50 seeds, mean {mean_iters:.1f} iterations")
    assert hits >= 45


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="printed auxiliary updates overflow double range on many seeds before the rate settles")
def test_paper_faithful_default_setup_converges():
    hits, mean_iters = _default128_convergence(PF)
    print(f"paper_faithful converged within 50 iterations on {hits}/50 seeds, mean {mean_iters:.1f} iterations")
    assert hits >= 45
