"""Neutral-mode quartic, root acceptance, simplicity and zero searches."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional

import numpy as np
from scipy import optimize

from .errors import RegimeError, SearchInconsistencyError
from .params import MediumParams, Regime, classify_regime, derive_params
from .symbol import Frequency, dmu_dtau_array, mu_array, sigma_array

ACCEPT_TOL = 1e-10


@dataclass(frozen=True)
class NeutralRoots:
    x1_sq: float
    x2_sq: float
    x1_accepted: bool
    x2_accepted: bool
    simplicity_derivative: Optional[complex]
    quartic_residual: float

    @property
    def growth_rate(self) -> float:
        """Predicted temporal growth rate per unit |eta| (0 when neutral)."""
        return math.sqrt(-self.x1_sq) if self.x1_sq < 0 else 0.0


def quartic_coefficients(v: float, C_B: float) -> np.ndarray:
    """Coefficients (highest first) of X^4 - 2(v^2+C^2)X^2 + v^4 - 2C^2 v^2."""
    v2, c2 = v * v, C_B * C_B
    return np.array([1.0, 0.0, -2.0 * (v2 + c2), 0.0, v2 * v2 - 2.0 * c2 * v2])


def closed_form_squares(v: float, C_B: float) -> tuple[float, float]:
    v2, c2 = v * v, C_B * C_B
    x2_sq = v2 + c2 + math.sqrt(c2 * c2 + 4.0 * c2 * v2)
    # Vieta: x1_sq * x2_sq = v^4 - 2 C^2 v^2; avoids cancellation near the threshold
    x1_sq = v2 * (v2 - 2.0 * c2) / x2_sq
    return x1_sq, x2_sq


def _quartic_residual(y: float, v: float, C_B: float) -> float:
    v2, c2 = v * v, C_B * C_B
    scale = (v2 + c2) ** 2
    return abs(y * y - 2.0 * (v2 + c2) * y + v2 * v2 - 2.0 * c2 * v2) / scale


def candidate_from_square(x_sq: float) -> complex:
    return complex(math.sqrt(x_sq)) if x_sq >= 0 else complex(0.0, math.sqrt(-x_sq))


def _tilde_mu(X: complex, params: MediumParams, eta: float):
    tau = 1j * complex(X) * eta
    if tau.real < 0:
        # X -> -X is also a quartic root; keep Re(tau) >= 0
        tau = -tau
    tau = complex(max(tau.real, 0.0), tau.imag)
    mp = complex(mu_array(params.v_plus, tau, eta, params.C_B))
    mm = complex(mu_array(-params.v_plus, tau, eta, params.C_B))
    return mp / (1j * eta), mm / (1j * eta)


def verify_acceptance(X: complex, params: MediumParams, eta: float = 1.0,
                      tol: float = ACCEPT_TOL) -> bool:
    """True iff the branch-correct roots satisfy mu~+ mu~- = -1 at tau = iX eta."""
    tp, tm = _tilde_mu(X, params, eta)
    return abs(tp * tm + 1.0) <= tol


def simplicity_derivative(params: MediumParams) -> complex:
    """d(mu~+ mu~- + 1)/dX at X1 in closed form."""
    if classify_regime(params).tag is not Regime.STABLE:
        raise RegimeError(f"M_B = {params.M_B} <= sqrt(2): X1 is not a real neutral root")
    x1_sq, _ = closed_form_squares(params.v_plus, params.C_B)
    X1 = math.sqrt(x1_sq)
    tp, tm = _tilde_mu(X1, params, 1.0)
    v, C = params.v_plus, params.C_B
    return 2.0 * X1 * (x1_sq - v * v - C * C) / (tp * tm * C**4)


def neutral_roots(params: MediumParams) -> NeutralRoots:
    v, C = params.v_plus, params.C_B
    x1_sq, x2_sq = closed_form_squares(v, C)
    resid = max(_quartic_residual(x1_sq, v, C), _quartic_residual(x2_sq, v, C))
    simp = None
    if classify_regime(params).tag is Regime.STABLE:
        simp = simplicity_derivative(params)
    return NeutralRoots(
        x1_sq=x1_sq,
        x2_sq=x2_sq,
        x1_accepted=verify_acceptance(candidate_from_square(x1_sq), params),
        x2_accepted=verify_acceptance(candidate_from_square(x2_sq), params),
        simplicity_derivative=simp,
        quartic_residual=resid,
    )


class ZeroType(str, Enum):
    NEUTRAL_IMAGINARY = "NeutralImaginary"
    UNSTABLE_REAL_PART = "UnstableRealPart"


@dataclass(frozen=True)
class HemisphereZero:
    freq: Frequency
    residual: float
    type: ZeroType


def _sigma_and_derivative(tau: complex, eta: float, params: MediumParams):
    v, C = params.v_plus, params.C_B
    mp = mu_array(v, tau, eta, C)
    mm = mu_array(-v, tau, eta, C)
    s = C**2 * (mp * mm - eta**2)
    with np.errstate(divide="ignore", invalid="ignore"):
        ds = C**2 * (dmu_dtau_array(v, tau, eta, mp, C) * mm
                     + mp * dmu_dtau_array(-v, tau, eta, mm, C))
    return complex(s), complex(ds)


def _newton_refine(tau: complex, params: MediumParams, tol: float, max_iter: int = 60):
    """Damped Newton on Sigma(., eta=1), clamped to Re(tau) >= 0."""
    norm = lambda t: abs(t) ** 2 + 1.0  # Lambda^2 at eta = 1
    s, ds = _sigma_and_derivative(tau, 1.0, params)
    for _ in range(max_iter):
        if abs(s) / norm(tau) <= tol:
            return tau, abs(s) / norm(tau)
        if not np.isfinite(ds) or ds == 0:
            break
        step = -s / ds
        lam = 1.0
        while lam > 1e-4:
            trial = tau + lam * step
            trial = complex(max(trial.real, 0.0), trial.imag)
            if trial == 0:
                lam *= 0.5
                continue
            st, dst = _sigma_and_derivative(trial, 1.0, params)
            if abs(st) / norm(trial) < abs(s) / norm(tau):
                break
            lam *= 0.5
        else:
            break
        tau, s, ds = trial, st, dst
    return tau, abs(s) / norm(tau)


def _local_minima(F: np.ndarray) -> List[tuple]:
    n0, n1 = F.shape
    P = np.pad(F, 1, constant_values=np.inf)
    core = P[1:-1, 1:-1]
    mask = np.ones_like(F, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            mask &= core <= P[1 + di:n0 + 1 + di, 1 + dj:n1 + 1 + dj]
    return list(zip(*np.nonzero(mask)))


def _boundary_zeros(params: MediumParams, R: float, n: int, tol: float) -> List[complex]:
    """Zeros on Re(tau) = 0 at eta = 1.

    There the symbol is real wherever it can vanish (both roots real or both
    imaginary); in mixed zones |Sigma| >= C_B^2, so sign changes of the real
    part bracket every boundary zero.
    """
    d = np.linspace(-R, R, n)
    S = sigma_array(1j * d, 1.0, params)
    real = np.abs(S.imag) <= 1e-12 * (np.abs(S.real) + 1.0)
    out = []

    def f(x):
        return complex(sigma_array(1j * x, 1.0, params)).real

    for k in range(n - 1):
        a, b = S[k].real, S[k + 1].real
        if not (real[k] and real[k + 1]):
            continue
        if a == 0.0:
            out.append(d[k])
        elif a * b < 0:
            out.append(optimize.brentq(f, d[k], d[k + 1], xtol=1e-15, rtol=1e-15, maxiter=200))
    zeros = []
    for x in out:
        tau = complex(0.0, x)
        s = complex(sigma_array(tau, 1.0, params))
        if abs(s) / (x * x + 1.0) <= tol:
            zeros.append(tau)
    return zeros


def find_hemisphere_zeros(params: MediumParams, gamma_floor: float = 1e-3,
                          grid_density: int = 128, tol: float = 1e-10,
                          neutral_gamma_tol: float = 1e-12) -> List[HemisphereZero]:
    """Zeros of the symbol on the unit hemisphere.

    Works on the slice eta = 1 (zeros are rays, and eta = 0 carries none
    because Sigma(tau, 0) = tau^2): a bracketing scan along Re(tau) = 0 for
    neutral zeros, plus a coarse |Sigma|/Lambda^2 scan of Re(tau) > 0 refined
    by damped Newton.  Results are projected onto the hemisphere and mirrored
    to eta < 0.
    """
    if grid_density < 64:
        raise ValueError("grid_density must be >= 64")
    verdict = classify_regime(params)
    if verdict.tag is Regime.CRITICAL:
        return []

    v, C = params.v_plus, params.C_B
    R = 2.0 * (v + C)
    found: List[complex] = _boundary_zeros(params, R, 16 * grid_density + 1, tol)

    g = np.linspace(0.0, R, grid_density // 2 + 1)[1:]
    d = np.linspace(-R, R, grid_density + 1)
    T = g[:, None] + 1j * d[None, :]
    F = np.abs(sigma_array(T, 1.0, params)) / (np.abs(T) ** 2 + 1.0)
    for i, j in _local_minima(F):
        tau, res = _newton_refine(complex(T[i, j]), params, tol)
        if res > tol:
            continue
        if tau.real < neutral_gamma_tol:
            tau = complex(0.0, tau.imag)
        if any(abs(tau - t) < 1e-7 * (1 + abs(t)) for t in found):
            continue
        found.append(tau)

    zeros: List[HemisphereZero] = []
    for tau in sorted(found, key=lambda t: (t.real, t.imag)):
        for eta in (1.0, -1.0):
            fr = Frequency.from_tau(tau, eta).normalized()
            res = abs(complex(sigma_array(fr.tau, fr.eta, params)))
            kind = ZeroType.NEUTRAL_IMAGINARY if fr.gamma == 0 else ZeroType.UNSTABLE_REAL_PART
            zeros.append(HemisphereZero(fr, res, kind))

    if verdict.tag is Regime.UNSTABLE and not any(
        z.type is ZeroType.UNSTABLE_REAL_PART and z.freq.gamma >= gamma_floor for z in zeros
    ):
        raise SearchInconsistencyError(
            f"X1^2 < 0 at M_B={params.M_B:.6g} predicts a growing mode, none found"
        )
    return zeros


def critical_velocity(c: float, rho: float, b2: float = 0.0, xtol: float = 1e-10) -> float:
    """Threshold speed from bisection on the sign of X1^2(v)."""
    base = derive_params(1.0, c, rho, b2)
    C = base.C_B

    def x1_sq(v):
        return closed_form_squares(v, C)[0]

    return optimize.bisect(x1_sq, 1e-12 * C, 10.0 * C, xtol=xtol, rtol=1e-15, maxiter=200)


@dataclass(frozen=True)
class SweepRow:
    v: float
    M_B: float
    x1_sq: float
    x2_sq: float
    verdict: str
    growth_rate: float


def sweep_velocity(c: float, rho: float, b2: float, velocities) -> List[SweepRow]:
    rows = []
    for v in velocities:
        p = derive_params(v, c, rho, b2)
        x1, x2 = closed_form_squares(p.v_plus, p.C_B)
        rate = math.sqrt(-x1) if x1 < 0 else 0.0
        rows.append(SweepRow(p.v_plus, p.M_B, x1, x2, classify_regime(p).tag.value, rate))
    return rows
