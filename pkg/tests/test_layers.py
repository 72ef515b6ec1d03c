import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from hypmac.errors import InadmissibleLayers
from hypmac.layers import (LayerState, OdeModel, alphas_for_gaps, forcing, initial_velocity,
                           integrate_layers, leading_S, leading_S_inv, lengths_Lpm,
                           lplus_gradient, rhs, sigma_term)
from hypmac.potential import Damping, Potential
from hypmac.profile import build_profile

Q = Potential.quartic()


def mac(eps=0.06, **kw):
    return OdeModel("MAC", eps, **kw)


def test_alphas_follow_gaps():
    a = alphas_for_gaps([0.3, 0.6], 0.04, Q)
    # gaps (0.6, 0.3, 0.8): the middle one is shortest
    assert a[1] > a[0] > a[2] > 0
    assert np.allclose(alphas_for_gaps([0.25, 0.75], 0.05, Q), alphas_for_gaps([0.25, 0.75], 0.05, Q)[0])
    with pytest.raises(ValueError):
        alphas_for_gaps([0.3, 0.6], 0.04, Q, mode="nope")


def test_exact_alphas_close_to_asymptotic():
    h = [0.3, 0.7]
    ex = alphas_for_gaps(h, 0.04, Q, mode="exact")
    asym = alphas_for_gaps(h, 0.04, Q)
    assert np.allclose(ex, asym, rtol=1e-5)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1), st.floats(0.01, 0.1))
def test_alpha_is_a_local_decreasing_function_of_its_gap(k, shift):
    # moving interior layer k+1 to the left shrinks gap k+1 and widens gap k+2
    h = np.array([0.2, 0.5, 0.8])
    eps = 0.03
    moved = h.copy()
    moved[k + 1] -= shift
    base = alphas_for_gaps(h, eps, Q)
    new = alphas_for_gaps(moved, eps, Q)
    assert new[k + 1] > base[k + 1]
    assert new[k + 2] < base[k + 2]
    others = [i for i in range(4) if i not in (k + 1, k + 2)]
    assert np.array_equal(new[others], base[others])


def test_sigma_term():
    assert sigma_term([0.1, 0.1, 0.1]) == 0.0
    a, b, c = 0.3, 0.5, 0.2
    assert sigma_term([a, b, c], 1) == pytest.approx((a - 2 * b + c) / 2)
    x, y = np.random.default_rng(0).random((2, 5))
    assert sigma_term(2 * x - y) == pytest.approx(2 * sigma_term(x) - sigma_term(y))
    with pytest.raises(ValueError):
        sigma_term([1.0, 2.0], N=1)


def test_lengths_Lpm():
    Lp, Lm = lengths_Lpm([0.3, 0.65])
    assert Lp == pytest.approx(0.35) and Lm == pytest.approx(0.65)
    Lp, Lm = lengths_Lpm([0.2, 0.5, 0.9])
    assert Lp + Lm == pytest.approx(1.0)
    assert Lp == pytest.approx(0.3 + 0.1)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.01, 0.99), min_size=1, max_size=7, unique=True))
def test_lplus_gradient_matches_lengths(h):
    h = np.sort(h)
    assume(np.min(np.diff(np.concatenate([[0], h, [1]]))) > 1e-3)
    g = lplus_gradient(h.size)
    d = 1e-3 * np.min(np.diff(np.concatenate([[0], h, [1]])))
    for k in range(h.size):
        e = np.zeros(h.size)
        e[k] = d
        fd = (lengths_Lpm(h + e)[0] - lengths_Lpm(h - e)[0]) / (2 * d)
        assert fd == pytest.approx(g[k], abs=1e-9)


def test_profile_mass_matches_lengths():
    h = [0.3, 0.65]
    eps = 0.04
    prof = build_profile(h, eps, Q, n=1024)
    Lp, Lm = lengths_Lpm(h)
    assert prof.mass == pytest.approx(Lp - Lm, abs=eps)


@pytest.mark.parametrize("N", range(1, 9))
def test_leading_matrices_are_inverse(N):
    S = leading_S(N, 0.05, 0.9)
    assert np.allclose(S @ leading_S_inv(N, 0.05, 0.9), np.eye(N), atol=1e-12, rtol=0)


def test_leading_matrices_small_cases():
    assert leading_S(1, 0.1, 2.0)[0, 0] == pytest.approx(40.0)
    assert leading_S_inv(1, 0.1, 2.0)[0, 0] == pytest.approx(0.1 / 4.0)
    S2 = leading_S(2, 1.0, 1.0)
    assert np.array_equal(S2, [[2, -1], [-1, 2]])
    assert np.allclose(leading_S_inv(2, 1.0, 1.0) * 3, [[2, 1], [1, 2]])


@pytest.mark.parametrize("N", [1, 2, 3, 5])
def test_mac_rhs_is_S_inverse_applied_to_gradient(N):
    # independent route: S^{-1} P with P_j = a^{j+1} - a^j + (-1)^{N-j} (a^{N+2} - a^{N+1})
    rng = np.random.default_rng(N)
    h = np.sort(rng.uniform(0.05, 0.95, N + 1))
    while np.min(np.diff(np.concatenate([[0], h, [1]]))) < 0.08:
        h = np.sort(rng.uniform(0.05, 0.95, N + 1))
    eps = 0.02
    model = mac(eps, rho=1.0)
    a = alphas_for_gaps(h, eps, Q)
    j = np.arange(1, N + 1)
    P = a[j] - a[j - 1] + (-1.0) ** (N - j) * (a[N + 1] - a[N])
    v = leading_S_inv(N, eps, model.c_F) @ P
    out = forcing(h, model)
    assert np.allclose(out[:N], v, rtol=1e-10, atol=1e-300)


def test_mac_n1_rigid_motion():
    model = mac(0.04)
    for h in ([0.2, 0.7], [0.35, 0.6], [0.4, 0.9]):
        v = forcing(h, model)
        assert v[0] == v[1]
        a = alphas_for_gaps(h, 0.04, Q)
        assert v[0] == pytest.approx(0.04 / (2 * model.c_F) * (a[2] - a[0]), rel=1e-12)


def test_mac_n2_displayed_system():
    eps = 0.03
    model = mac(eps)
    h = [0.2, 0.45, 0.8]
    a = alphas_for_gaps(h, eps, Q)
    k = eps / (3 * model.c_F)
    want = k * np.array([-2 * a[0] + a[1] + 2 * a[2] - a[3],
                         -a[0] - a[1] + a[2] + a[3],
                         a[0] - 2 * a[1] - a[2] + 2 * a[3]])
    assert np.allclose(forcing(h, model), want, rtol=1e-12, atol=0)


def test_ac_sum_rule():
    eps = 0.03
    model = OdeModel("AC", eps)
    h = [0.15, 0.4, 0.7, 0.85]
    a = alphas_for_gaps(h, eps, Q)
    assert np.sum(forcing(h, model)) == pytest.approx(eps / model.c_F * (a[-1] - a[0]), rel=1e-12)


@pytest.mark.parametrize("kind", ["AC", "MAC", "HYP_AC", "HYP_MAC", "CH_N3"])
def test_symmetric_configuration_is_stationary(kind):
    h = [1 / 6, 0.5, 5 / 6]
    model = OdeModel(kind, 0.05, tau=0.1 if kind.startswith("HYP") else 0.0)
    out = rhs(LayerState(h=np.array(h), hdot=np.zeros(3)), model)
    vel = out if not model.hyperbolic else out[1]
    assert np.allclose(vel, 0.0, atol=1e-15)


def test_ch_n3_structure():
    model = OdeModel("CH_N3", 0.03)
    h = [0.3, 0.38, 0.8]  # l_2 small
    v = forcing(h, model)
    a = alphas_for_gaps(h, 0.03, Q)
    first = (a[2] - a[0]) / (4 * (h[1] - h[0]))
    second = (a[3] - a[1]) / (4 * (h[2] - h[1]))
    assert v[0] == pytest.approx(first)
    assert v[1] == pytest.approx(first + second)
    assert v[2] == pytest.approx(second)
    # alpha^2 dominates: h_2 and h_3 move together, h_1 barely moves
    assert v[1] == pytest.approx(v[2], rel=1e-3)
    assert abs(v[0]) < 1e-3 * abs(v[1])
    with pytest.raises(ValueError):
        forcing([0.3, 0.7], model)


def test_model_validation():
    with pytest.raises(ValueError):
        OdeModel("HYP_MAC", 0.05)
    with pytest.raises(ValueError):
        OdeModel("XX", 0.05)
    m = OdeModel.from_damping("HYP_MAC", 0.05, tau=0.1,
                              damping=Damping.relaxation(Q, 0.1))
    assert m.gamma == pytest.approx(0.96)
    assert m.parabolic().kind == "MAC"
    assert m.collision_gap == pytest.approx(0.2)


def test_inadmissible_layers():
    with pytest.raises(InadmissibleLayers):
        rhs(np.array([0.3, 0.35]), mac(0.05))
    with pytest.raises(InadmissibleLayers):
        integrate_layers([0.6, 0.3], mac(0.01), 1.0)


def test_velocity_bound():
    eps = 0.05
    model = mac(eps, rho=1.0)
    h = [0.2, 0.4, 0.7]
    a = alphas_for_gaps(h, eps, Q)
    assert np.max(np.abs(forcing(h, model))) <= 2 * eps / model.c_F * np.max(a) * 2


def test_mac_drifts_left_when_left_gap_is_short():
    traj = integrate_layers([0.2, 0.7], mac(0.06, rho=0.5), 50.0)
    dh = traj.final - traj.h[0]
    assert dh[0] < 0 and dh[0] == pytest.approx(dh[1], rel=1e-6)


def test_mac_conserves_lengths():
    traj = integrate_layers([0.2, 0.45, 0.8], mac(0.05, rho=1.0), 200.0, tol=1e-10)
    Lp, Lm = traj.lengths()
    assert np.max(np.abs((Lp - Lm) - (Lp[0] - Lm[0]))) < 1e-8


def test_projected_velocity_keeps_lengths():
    model = OdeModel("HYP_MAC", 0.05, tau=0.2, rho=1.0)
    h0 = [0.2, 0.45, 0.8]
    hdot = initial_velocity(h0, model, "projected")
    assert np.dot(lplus_gradient(3), hdot) == pytest.approx(0.0, abs=1e-18)
    traj = integrate_layers(h0, model, 200.0, tol=1e-10, hdot_policy="projected")
    Lp, Lm = traj.lengths()
    assert np.max(np.abs(Lp - Lp[0])) < 1e-8
    assert np.max(np.abs(Lm - Lm[0])) < 1e-8


def test_velocity_policies():
    model = OdeModel("HYP_AC", 0.05, tau=0.1, gamma=2.0)
    h = [0.3, 0.6]
    assert np.allclose(initial_velocity(h, model), forcing(h, model) / 2.0)
    assert np.all(initial_velocity(h, model, "zero") == 0)
    assert np.all(initial_velocity(h, model, [1.0, 2.0]) == [1.0, 2.0])
    with pytest.raises(ValueError):
        initial_velocity(h, model, "bogus")


def test_symmetric_trajectory_is_constant():
    traj = integrate_layers([0.25, 0.75], mac(0.05), 100.0)
    assert np.max(np.abs(traj.h - traj.h[0])) < 1e-12


def test_tolerance_halving_is_consistent():
    model = OdeModel("AC", 0.05, rho=1.0)
    a = integrate_layers([0.3, 0.6], model, 20.0, tol=1e-8).final
    b = integrate_layers([0.3, 0.6], model, 20.0, tol=5e-9).final
    assert np.max(np.abs(a - b)) <= 10 * 1e-8


def test_collision_ends_gracefully(tmp_path):
    model = OdeModel("AC", 0.06, rho=1.0)
    traj = integrate_layers([0.35, 0.6], model, 100.0)
    assert traj.collided
    assert np.min(np.diff(traj.final)) == pytest.approx(model.collision_gap, rel=1e-6)
    traj.to_csv(tmp_path / "t.csv")
    head = (tmp_path / "t.csv").read_text().splitlines()[0]
    assert head == "t,h_1,h_2,L_plus,L_minus,Psi"


def test_hyperbolic_csv_has_velocities(tmp_path):
    model = OdeModel("HYP_MAC", 0.06, tau=0.1, rho=0.5)
    traj = integrate_layers([0.35, 0.6], model, 1.0)
    traj.to_csv(tmp_path / "t.csv")
    head = (tmp_path / "t.csv").read_text().splitlines()[0]
    assert head == "t,h_1,h_2,hdot_1,hdot_2,L_plus,L_minus,Psi"
    assert traj.at([0.5]).shape == (1, 2)
