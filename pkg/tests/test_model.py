"""Closed-form model: channel inversion, costs, utility, demand and inverse."""

import numpy as np
import pytest

from mec_priority_pricing.model import (
    Cls,
    LoadState,
    MarketSignal,
    SystemParams,
    UnstableLoadError,
    UserProfile,
    X_MIN,
    beta_of_x,
    demand,
    demand_inverse,
    demand_zero,
    edge_delays,
    edge_tx,
    local_cost,
    profit,
    utility,
)


@pytest.fixture(scope="module")
def user(params):
    return UserProfile.make(0, 30.0, 0.9, params)


# -- derived constants ------------------------------------------------------

def test_derived_rates(params):
    assert params.mu_a == pytest.approx(6.6e9)
    assert params.mu_m == pytest.approx(0.5e9 / 6.6e9)
    assert params.mu_B == pytest.approx(3e9 / 6.6e9)
    # per-job local computing energy at the default constants
    energy = params.kappa_m * params.f_m ** 2 * params.mu_a
    assert energy == pytest.approx(1.65)


def test_snr_factor(params):
    d = 30.0
    assert params.snr_factor(d) == pytest.approx(
        d ** (-3.5) * 0.1 / 1e-7, rel=1e-14)


def test_params_validation():
    with pytest.raises(ValueError):
        SystemParams(W=-1.0)
    with pytest.raises(UnstableLoadError):
        SystemParams(lambda_a=1.0)   # exceeds mu_m ~ 0.0758


# -- channel threshold ------------------------------------------------------

def test_beta_roundtrip(user):
    xs = np.linspace(1e-3, 1.0 - 1e-3, 999)
    beta = beta_of_x(xs, user.rho)
    back = np.exp(-(np.exp(beta) - 1.0) / user.rho)
    assert np.max(np.abs(back - xs)) < 1e-12


def test_beta_matches_bisection_oracle(user):
    # independent root find of exp(-(e^b - 1)/rho) = x
    for x in (0.01, 0.3, 0.9):
        lo, hi = 1e-12, 60.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if np.exp(-(np.exp(mid) - 1.0) / user.rho) > x:
                lo = mid
            else:
                hi = mid
        assert beta_of_x(x, user.rho) == pytest.approx(0.5 * (lo + hi),
                                                       abs=1e-10)


def test_beta_domain(user):
    for bad in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            beta_of_x(bad, user.rho)


# -- costs ------------------------------------------------------------------

def test_local_cost_oracle(user, params):
    # duplicate formula: c_e*kappa*f^2*mu_a + c_d / (mu_m - lambda*(1-x))
    for x in (0.0, 0.4, 0.99):
        expect = (user.c_e * params.kappa_m * params.f_m ** 2 * params.mu_a
                  + user.c_d / (params.mu_m - params.lambda_a * (1.0 - x)))
        assert local_cost(x, user, params) == pytest.approx(expect, rel=1e-14)


def test_local_cost_decreasing_in_x(user, params):
    xs = np.linspace(0.0, 0.99, 50)
    z = local_cost(xs, user, params)
    assert np.all(np.diff(z) < 0.0)


def test_edge_tx(user, params):
    d_tx, e_tx = edge_tx(0.5, user, params)
    beta = beta_of_x(0.5, user.rho)
    assert d_tx == pytest.approx(
        params.tx_scale * 8.0 * params.L_a / (params.W * beta), rel=1e-14)
    assert e_tx == pytest.approx(params.P_tr * d_tx, rel=1e-14)


def test_edge_delays(params):
    mu_B = params.mu_B
    d_h0, d_l0 = edge_delays(LoadState(0.0, 0.0), params)
    assert d_h0 == pytest.approx(1.0 / mu_B)
    assert d_l0 == pytest.approx(1.0 / mu_B)
    d_h, d_l = edge_delays(LoadState(0.25 * mu_B, 0.15 * mu_B), params)
    assert d_h == pytest.approx(1.0 / (0.75 * mu_B))
    assert d_l == pytest.approx(mu_B * d_h / (0.60 * mu_B))
    assert d_l > d_h
    with pytest.raises(UnstableLoadError):
        edge_delays(LoadState(0.7 * mu_B, 0.4 * mu_B), params)


# -- utility / demand -------------------------------------------------------

def test_utility_zero_at_origin(user, params):
    assert utility(0.0, user, params) == 0.0
    out = utility(np.array([0.0, 0.5, 0.0]), user, params)
    assert out[0] == 0.0 and out[2] == 0.0 and np.isfinite(out[1])


def test_utility_scalar_and_vector_agree(user, params):
    xs = np.linspace(0.01, 0.95, 25)
    vec = utility(xs, user, params)
    for x, v in zip(xs, vec):
        assert utility(float(x), user, params) == pytest.approx(v, rel=1e-14)


def test_demand_is_derivative_of_utility(user, params):
    rng = np.random.default_rng(7)
    xs = rng.uniform(0.02, 0.97, 100)
    h = 1e-7
    fd = (utility(xs + h, user, params) - utility(xs - h, user, params)) \
        / (2.0 * h)
    g = demand(xs, user, params)
    assert np.max(np.abs(g - fd) / np.maximum(np.abs(g), 1.0)) < 1e-5


def test_demand_monotone_unique_zero(user, params):
    xs = np.linspace(1e-3, 1.0 - 1e-3, 999)
    g = demand(xs, user, params)
    assert np.all(np.diff(g) < 0.0)
    assert np.sum(np.diff(np.sign(g)) != 0.0) == 1
    x_up = demand_zero(user, params)
    assert abs(demand(x_up, user, params)) < 1e-6
    assert 0.0 < x_up < 1.0


def test_demand_inverse_identity(user, params):
    x_up = demand_zero(user, params)
    cs = demand(np.linspace(0.05, x_up * 0.999, 40), user, params)
    xs = demand_inverse(cs, user, params)
    assert np.max(np.abs(demand(xs, user, params) - cs)) < 1e-6


def test_demand_inverse_clamps(user, params):
    x_up = demand_zero(user, params)
    assert demand_inverse(-5.0, user, params) == pytest.approx(x_up, abs=1e-9)
    huge = demand(X_MIN, user, params) * 2.0
    assert demand_inverse(huge, user, params) == X_MIN


def test_demand_vectorized_users(params):
    users = [UserProfile.make(i, d, 0.5, params) for i, d in
             enumerate((15.0, 40.0, 70.0))]

    class Vec:
        rho = np.array([u.rho for u in users])
        c_d = np.array([u.c_d for u in users])
        c_e = np.array([u.c_e for u in users])

    g = demand(0.5, Vec, params)
    for i, u in enumerate(users):
        assert g[i] == pytest.approx(demand(0.5, u, params), rel=1e-14)


# -- profit / market structures ---------------------------------------------

def test_profit_decomposition(user, params):
    load = LoadState(0.1, 0.05)
    d_h, d_l = edge_delays(load, params)
    for x in (0.2, 0.7):
        v_h = profit(x, Cls.H, load, user, params)
        v_l = profit(x, Cls.L, load, user, params)
        u_val = utility(x, user, params)
        assert v_h == pytest.approx(u_val - user.c_d * x * d_h, abs=1e-10)
        assert v_l == pytest.approx(u_val - user.c_d * x * d_l, abs=1e-10)
        assert v_h > v_l    # priority service is worth something


def test_user_profile_validation(params):
    with pytest.raises(ValueError):
        UserProfile(id=0, d=30.0, c_d=1.5, c_e=0.1, rho=1.0)
    with pytest.raises(ValueError):
        UserProfile(id=0, d=30.0, c_d=0.5, c_e=0.5, rho=-1.0)
    u = UserProfile.make(3, 25.0, 0.7, params)
    assert u.c_e == pytest.approx(0.3)


def test_market_signal_validation():
    with pytest.raises(ValueError):
        MarketSignal(p_H=1.0, p_L=2.0, D_H=1.0, D_L=2.0)
    with pytest.raises(ValueError):
        MarketSignal(p_H=2.0, p_L=1.0, D_H=2.0, D_L=1.0)
    sig = MarketSignal(p_H=2.0, p_L=1.0, D_H=1.0, D_L=3.0)
    assert sig.total_cost(0.5, Cls.H) == pytest.approx(2.5)
    assert sig.total_cost(0.5, Cls.L) == pytest.approx(2.5)


def test_load_state(params):
    with pytest.raises(ValueError):
        LoadState(-0.1, 0.0)
    assert LoadState(0.1, 0.1).is_stable(params)
    assert not LoadState(0.4, 0.1).is_stable(params)
