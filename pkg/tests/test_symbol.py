import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from cvsheet.errors import DomainError, SingularFormError
from cvsheet.params import MediumParams, derive_params
from cvsheet.symbol import Frequency, mu, mu_array, sigma, sigma_array, sigma_form1

from oracles import boundary_root, decaying_root

STABLE = derive_params(2, 0.8, 1, 0.6)        # C_B = 1, v = 2
SONIC = derive_params(1, 1, 1, 0)             # v = C_B


def random_params(rng):
    c, rho, b2 = rng.uniform(0.3, 2), rng.uniform(0.3, 3), rng.uniform(-2, 2)
    C = math.sqrt(c * c + b2 * b2 / rho)
    return derive_params(rng.uniform(0.1, 3) * C, c, rho, b2)


freq_st = st.tuples(st.floats(1e-3, 5), st.floats(-5, 5), st.floats(-5, 5))
par_st = st.tuples(st.floats(0.1, 4), st.floats(0.3, 2), st.floats(0.3, 3), st.floats(-2, 2))


def test_origin_is_not_a_frequency():
    with pytest.raises(DomainError):
        Frequency(0, 0, 0)
    with pytest.raises(DomainError):
        Frequency(-1, 0, 1)
    with pytest.raises(DomainError):
        mu_array(1.0, 0j, 0.0, 1.0)


def test_hemisphere_normalisation():
    fr = Frequency(3, 4, 12).normalized()
    assert fr.on_hemisphere()
    assert fr.lam == pytest.approx(1.0)


def test_mu_real_tau_without_wavenumber():
    assert mu("+", Frequency(1, 0, 0), STABLE) == pytest.approx(1.0, abs=1e-15)


def test_mu_mixed_zone_value():
    # delta + v eta = 0 sits inside the real zone
    assert mu("+", Frequency(0, -2, 1), STABLE) == pytest.approx(1.0, abs=1e-15)


def test_mu_vanishes_at_sonic_point():
    p, eta = STABLE, 1.0
    delta = (-p.v_plus / p.C_B + 1.0) * p.C_B * eta
    assert mu("+", Frequency(0, delta, eta), p) == 0
    assert mu("-", Frequency(0, p.v_plus - p.C_B, eta), p) == 0


def test_sigma_at_zero_wavenumber_is_tau_squared():
    for tau in (1.0, 0.3 + 2j, 2j, -1.5j):
        fr = Frequency.from_tau(tau, 0.0)
        assert sigma(fr, STABLE).sigma == pytest.approx(tau**2, rel=1e-14, abs=1e-15)


def test_sigma_boundary_examples():
    assert sigma(Frequency(0, 0, 1), STABLE).sigma == pytest.approx(2.0, abs=1e-14)
    assert sigma(Frequency(0, 0, 1), SONIC).sigma == pytest.approx(-1.0, abs=1e-14)
    assert sigma(Frequency(0, 0, 1), STABLE).on_boundary


def test_sigma_is_product_form():
    fr = Frequency(0.4, -1.1, 0.9)
    ev = sigma(fr, STABLE)
    assert ev.sigma == STABLE.C_B**2 * (ev.mu_plus * ev.mu_minus - fr.eta**2)


def test_form1_examples():
    fr = Frequency(1, 0.3, 0.7)
    assert sigma_form1(fr, STABLE) == pytest.approx(sigma(fr, STABLE).sigma, rel=1e-12)
    assert sigma_form1(Frequency(1, 0, 0), STABLE) == pytest.approx(1.0)
    with pytest.raises(SingularFormError):
        sigma_form1(Frequency(0, 0, 1), STABLE)


@given(freq_st, par_st)
def test_mu_matches_decaying_root_oracle(f, pr):
    g, d, e = f
    v, c, rho, b2 = pr
    p = derive_params(v, c, rho, b2)
    fr = Frequency(g, d, e)
    for side, vs in (("+", v), ("-", -v)):
        ref = decaying_root(fr.tau, e, vs, p.C_B)
        assert mu(side, fr, p) == pytest.approx(ref, rel=1e-13, abs=1e-15)


@given(freq_st, par_st, st.floats(1e-3, 1e3))
def test_homogeneity(f, pr, k):
    fr, p = Frequency(*f), derive_params(*pr)
    a, b = sigma(fr, p), sigma(fr.scaled(k), p)
    assert b.mu_plus == pytest.approx(k * a.mu_plus, rel=1e-12)
    assert b.mu_minus == pytest.approx(k * a.mu_minus, rel=1e-12)
    assert abs(b.sigma - k * k * a.sigma) <= 1e-12 * k * k * max(abs(a.sigma), fr.lam**2 * 1e-3)


def test_branch_positivity(rng):
    p_list = [random_params(rng) for _ in range(50)]
    for p in p_list:
        g = rng.uniform(1e-6, 3, 200)
        d = rng.uniform(-5, 5, 200)
        e = rng.uniform(-5, 5, 200)
        tau = g + 1j * d
        assert np.all(mu_array(p.v_plus, tau, e, p.C_B).real > 0)
        assert np.all(mu_array(-p.v_plus, tau, e, p.C_B).real > 0)


@pytest.mark.parametrize("p", [STABLE, SONIC, derive_params(0.6, 1, 1, 0), derive_params(3, 1, 2, 1)])
@pytest.mark.parametrize("eta", [1.0, -0.7, 2.5])
def test_boundary_continuity_across_case_table(p, eta):
    C, v = p.C_B, p.v_plus
    r = np.linspace(-v / C - 2, -v / C + 2, 801)
    for ratio in r:
        delta = ratio * C * abs(eta)
        for side, vs in (("+", v), ("-", -v)):
            edge = mu(side, Frequency(0, delta, eta), p)
            near = mu(side, Frequency(1e-8, delta, eta), p)
            # exact sonic points have a square-root cusp of size sqrt(gamma)
            dist = abs(((delta + vs * eta) / C) ** 2 - eta**2)
            tol = 1e-6 if dist > 1e-4 else 1e-3
            assert abs(edge - near) <= tol, (side, delta, edge, near)
            assert edge == pytest.approx(boundary_root(delta, eta, vs, C), abs=max(tol, 1e-6))


@pytest.mark.parametrize("p", [STABLE, SONIC])
def test_boundary_cases_have_prescribed_type(p):
    v, C, eta = p.v_plus, p.C_B, 1.0
    # real zone, above, below (upper side)
    inside = mu("+", Frequency(0, -v * eta + 0.5 * C * eta, eta), p)
    above = mu("+", Frequency(0, -v * eta + 1.5 * C * eta, eta), p)
    below = mu("+", Frequency(0, -v * eta - 1.5 * C * eta, eta), p)
    assert inside.imag == 0 and inside.real > 0
    assert above.real == 0 and above.imag > 0
    assert below.real == 0 and below.imag < 0
    assert mu("+", Frequency(0, 2.0, 0.0), p) == pytest.approx(2j / C)


@given(freq_st, par_st)
def test_conjugate_symmetry(f, pr):
    g, d, e = f
    p = derive_params(*pr)
    a = sigma(Frequency(g, d, e), p).sigma
    b = sigma(Frequency(g, -d, e), p).sigma
    assert b == pytest.approx(np.conj(a), rel=1e-12, abs=1e-14)


@given(freq_st, par_st)
def test_even_in_wavenumber(f, pr):
    g, d, e = f
    p = derive_params(*pr)
    a = sigma(Frequency(g, d, e), p).sigma
    b = sigma(Frequency(g, d, -e), p).sigma
    assert b == pytest.approx(a, rel=1e-12, abs=1e-14)


def test_root_coincidence_rules():
    for p in (STABLE, SONIC, derive_params(0.5, 1, 1, 0)):
        ev = sigma(Frequency(0.7, 1.3, 0.0), p)
        assert ev.mu_plus == ev.mu_minus
    # tau = 0: coincide iff v^2 < C^2
    sub = sigma(Frequency(0, 0, 1), derive_params(0.5, 1, 1, 0))
    sup = sigma(Frequency(0, 0, 1), STABLE)
    assert sub.mu_plus == pytest.approx(sub.mu_minus, abs=1e-15)
    assert abs(sup.mu_plus - sup.mu_minus) > 0.5
    assert sup.mu_plus + sup.mu_minus == 0


def test_vectorised_matches_scalar(rng):
    p = random_params(rng)
    tau = rng.uniform(0, 2, 30) + 1j * rng.uniform(-3, 3, 30)
    tau[:5] = 1j * tau[:5].imag
    eta = rng.uniform(-3, 3, 30)
    s = sigma_array(tau, eta, p)
    for k in range(30):
        assert s[k] == pytest.approx(sigma(Frequency.from_tau(tau[k], eta[k]), p).sigma, rel=1e-15)


def test_still_fluid_has_coinciding_roots():
    # derive_params rejects v = 0, so build the state directly
    p = MediumParams(0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0)
    ev = sigma(Frequency(0.3, 0.2, 1.1), p)
    assert ev.mu_plus == ev.mu_minus
