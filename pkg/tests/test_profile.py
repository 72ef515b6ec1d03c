import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypmac.errors import AsymptoticRangeError, InadmissibleLayers, NoSolution
from hypmac.potential import Potential, transition_energy
from hypmac.profile import (LayerVector, MetastableProfile, alpha_beta, alpha_beta_asymptotic,
                            build_profile, cutoff, gap_signs, gradient_energy, half_period,
                            half_period_from_deviation, layer_gaps, minimal_half_period,
                            renormalized_energy, solve_mass_constraint, solve_standing_wave)

Q = Potential.quartic()
C_F = transition_energy(Q)


def test_small_amplitude_half_period_is_linear_limit():
    eps = 0.05
    assert half_period(1e-6, Q, eps) == pytest.approx(0.5 * math.pi * eps, rel=1e-9)
    assert minimal_half_period(Q, eps) == pytest.approx(0.5 * math.pi * eps)


def test_half_period_grows_toward_the_well():
    eps = 0.05
    lengths = [half_period_from_deviation(b, Q, eps) for b in (0.5, 1e-2, 1e-4, 1e-8)]
    assert np.all(np.diff(lengths) > 0)
    # beta = K exp(-A l / 2 eps), so l / 2 grows like (eps / A) ln(1 / beta)
    slope = (lengths[-1] - lengths[-2]) / math.log(1e4)
    assert slope == pytest.approx(eps / math.sqrt(2), rel=1e-3)


def test_half_period_rejects_bad_extremum():
    with pytest.raises(ValueError):
        half_period(1.2, Q, 0.05)


def test_wave_solves_the_ode():
    eps, length = 0.05, 1.0
    w = solve_standing_wave(length, eps, 1, Q)
    assert w(0.5) == pytest.approx(0.0, abs=1e-12)
    assert w(-0.5) == pytest.approx(0.0, abs=1e-12)
    assert w(0.0) == pytest.approx(w.phi0)
    x = np.linspace(-0.45, 0.45, 19)
    d = 1e-3 * eps
    lap = (w(x + d) - 2 * w(x) + w(x - d)) / d ** 2
    assert np.max(np.abs(eps ** 2 * lap + Q.f(w(x)))) < 1e-6
    # odd continuation past the zero
    assert w(0.5 + 0.3 * eps) == pytest.approx(-w(0.5 - 0.3 * eps), abs=1e-10)


def test_negative_branch_mirrors_positive():
    eps, length = 0.06, 0.8
    up = solve_standing_wave(length, eps, 1, Q)
    down = solve_standing_wave(length, eps, -1, Q)
    x = np.linspace(-0.4, 0.4, 9)
    assert np.allclose(down(x), -up(x), atol=1e-13)
    assert down.alpha == pytest.approx(up.alpha, rel=1e-12)


def test_deviation_keeps_relative_precision():
    w = solve_standing_wave(1.0, 0.03, 1, Q)
    # beta ~ 4 exp(-A / 2r) is far below machine epsilon relative to 1
    assert w.beta < 1e-9
    assert w.deviation(0.0) == pytest.approx(w.beta, rel=1e-12)
    assert w.alpha == pytest.approx(w.beta ** 2 * (1 - w.beta / 2) ** 2, rel=1e-9)


def test_no_wave_below_minimal_length():
    with pytest.raises(NoSolution):
        solve_standing_wave(0.25, 0.08, 1, Q)


def test_alpha_beta_modes():
    exact = alpha_beta(1.0, 0.05, 1, Q)
    asym = alpha_beta(1.0, 0.05, 1, Q, mode="asymptotic")
    assert exact.r == asym.r == pytest.approx(0.05)
    assert asym.beta == pytest.approx(exact.beta, rel=1e-5)
    assert asym.alpha == pytest.approx(exact.alpha, rel=1e-6)
    with pytest.raises(AsymptoticRangeError):
        alpha_beta(1.0, 0.2, 1, Q, mode="asymptotic")
    with pytest.raises(ValueError):
        alpha_beta(1.0, 0.05, 1, Q, mode="other")


def test_beta_error_decreases_with_r():
    errs = []
    for r in (0.08, 0.06, 0.05, 0.04):
        exact = alpha_beta(1.0, r, 1, Q).beta
        errs.append(abs(alpha_beta_asymptotic(r, math.sqrt(2), 4.0)[1] - exact) / exact)
    assert np.all(np.diff(errs) < 0)
    assert errs[1] < 1e-2 and errs[2] < 1e-3


def test_layer_vector_bookkeeping():
    lv = LayerVector([0.2, 0.5, 0.9])
    assert lv.N == 2
    assert np.allclose(lv.gaps, [0.4, 0.3, 0.4, 0.2])
    assert lv.ghosts == (-0.2, pytest.approx(1.1))
    assert lv.min_gap == pytest.approx(0.2)
    assert LayerVector.from_json(lv.to_json()) == lv
    assert list(gap_signs(4)) == [-1, 1, -1, 1]
    with pytest.raises(InadmissibleLayers):
        LayerVector([0.5, 0.4]).check(0.01)
    with pytest.raises(InadmissibleLayers):
        lv.check(0.06)  # 4 eps = 0.24 > 0.2


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.01, 0.99), min_size=1, max_size=6, unique=True))
def test_gaps_partition_the_reflected_interval(h):
    h = np.sort(h)
    gaps = layer_gaps(h)
    assert np.sum(gaps[1:-1]) + 0.5 * (gaps[0] + gaps[-1]) == pytest.approx(1.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_cutoff_is_a_monotone_switch(a, b):
    lo, hi = sorted((a, b))
    assert 0.0 <= cutoff(lo) <= cutoff(hi) <= 1.0
    assert cutoff(lo) + cutoff(-lo) == pytest.approx(1.0)


def test_gradient_energy_methods():
    n = 256
    x = np.linspace(0, 1, n + 1)
    u = np.cos(math.pi * x)
    assert gradient_energy(u, "spectral") == pytest.approx(math.pi ** 2 / 2, rel=1e-12)
    assert gradient_energy(u, "fd") == pytest.approx(math.pi ** 2 / 2, rel=1e-4)
    with pytest.raises(ValueError):
        gradient_energy(u, "other")


def test_profile_zeros_energy_and_mass():
    h = (0.3, 0.7)
    eps, n = 0.04, 1024
    prof = build_profile(h, eps, Q, n=n)
    assert np.allclose(prof(np.array(h)), 0.0, atol=1e-12)
    # plateaus: - on the outer gaps, + between the layers
    assert prof.u[0] < -0.99 and prof.u[n // 2] > 0.99
    assert renormalized_energy(prof.u, None, eps, 0.0, Q) == pytest.approx(2 * C_F, abs=1e-5)
    # near -1 on a total length 0.6, near +1 on 0.4
    assert prof.mass == pytest.approx(0.4 - 0.6, abs=4 * eps)
    assert prof.psi == pytest.approx(np.sum(np.diff(prof.alpha) ** 2))


def test_constant_state():
    c = MetastableProfile.constant_state(0.3, n=64)
    assert c.mass == pytest.approx(0.3)
    assert np.all(c(np.linspace(0, 1, 5)) == 0.3)


def test_mass_constraint_places_last_layer():
    eps = 0.05
    layers = solve_mass_constraint([0.3], -0.1, eps, Q, n=1024)
    prof = build_profile(layers, eps, Q, n=1024)
    assert prof.mass == pytest.approx(-0.1, abs=1e-8)
    # symmetric plateaus: the + gap has length close to 0.45
    assert layers.h[1] - layers.h[0] == pytest.approx(0.45, abs=0.01)
