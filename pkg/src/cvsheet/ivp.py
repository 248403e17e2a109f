"""Time-domain integration of one x1-Fourier mode of the linearised sheet problem.

Each side carries (h, v1, v3, B2) on a half-line of length L, discretised
with a diagonal-norm SBP first-derivative operator (fourth order inside,
second order at the boundary closure).  The interface and far-field
conditions are imposed weakly (SAT) on the incoming characteristic
``p +/- C v3`` with ``p = c^2 h + (b2/rho) B2``; the interface targets come
from solving the two jump conditions together with the outgoing
characteristics.  Time stepping is classical RK4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .errors import DomainError, InvalidRunError, StepSizeError
from .params import MediumParams, Regime, classify_regime, derive_params
from .roots import closed_form_squares

CFL_DEFAULT = 0.4
H_BOUNDARY = np.array([17 / 48, 59 / 48, 43 / 48, 49 / 48])
D_BOUNDARY = np.array([
    [-24 / 17, 59 / 34, -4 / 17, -3 / 34, 0.0, 0.0],
    [-1 / 2, 0.0, 1 / 2, 0.0, 0.0, 0.0],
    [4 / 43, -59 / 86, 0.0, 59 / 86, -4 / 43, 0.0],
    [3 / 98, 0.0, -59 / 98, 0.0, 32 / 49, -4 / 49],
])

H, V1, V3, B2 = range(4)


def sbp_norm(n_points: int, dx: float) -> np.ndarray:
    """Diagonal of the SBP norm matrix (quadrature weights)."""
    if n_points < 9:
        raise DomainError("SBP operator needs at least 9 points")
    w = np.ones(n_points)
    w[:4] = H_BOUNDARY
    w[-4:] = H_BOUNDARY[::-1]
    return dx * w


def sbp_derivative(u: np.ndarray, dx: float) -> np.ndarray:
    """SBP first derivative along the last axis."""
    out = np.empty_like(u)
    out[..., 2:-2] = (u[..., :-4] - 8 * u[..., 1:-3] + 8 * u[..., 3:-1] - u[..., 4:]) / 12.0
    out[..., :4] = u[..., :6] @ D_BOUNDARY.T
    out[..., -4:] = -(u[..., -1:-7:-1] @ D_BOUNDARY.T)[..., ::-1]
    return out / dx


def sbp_matrix(n_points: int, dx: float) -> np.ndarray:
    return sbp_derivative(np.eye(n_points), dx).T


@dataclass
class ModeState:
    """Fields on both half-lines; row order (h, v1, v3, B2), column k at |x3| = k dx."""

    eta: float
    t: float
    f: complex
    upper: np.ndarray
    lower: np.ndarray

    def copy(self) -> "ModeState":
        return ModeState(self.eta, self.t, self.f, self.upper.copy(), self.lower.copy())

    def scaled(self, k: complex) -> "ModeState":
        return ModeState(self.eta, self.t, k * self.f, k * self.upper, k * self.lower)

    def is_zero(self) -> bool:
        return self.f == 0 and not np.any(self.upper) and not np.any(self.lower)


@dataclass(frozen=True)
class SeedPerturbation:
    """Gaussian bump in h (with B2 = b2 h, so a pure pressure pulse).

    ``direction`` = 0 gives a resting bump, +1/-1 launches it away from or
    towards the sheet.
    """

    amplitude: complex = 1.0
    center: float = 3.0
    width: float = 1.0
    side: str = "+"
    direction: int = 0

    @property
    def support(self) -> float:
        return self.center + 6.0 * self.width


class ModeSystem:
    """Semi-discrete operator for one wavenumber ``eta``."""

    def __init__(self, params: MediumParams, eta: float, L: float, n_cells: int = 2048,
                 cfl: float = CFL_DEFAULT):
        if not np.isfinite(eta):
            raise DomainError("eta must be finite")
        if L <= 0 or n_cells < 8:
            raise DomainError("need L > 0 and at least 8 cells")
        self.params = params
        self.eta = float(eta)
        self.L = float(L)
        self.n = n_cells + 1
        self.dx = self.L / n_cells
        self.s = np.linspace(0.0, self.L, self.n)
        self.cfl = cfl
        self.C = params.C_B
        self.v = params.v_plus
        self.b2 = params.b2
        self.norm = sbp_norm(self.n, self.dx)
        self._pen0 = self.C / self.norm[0]
        self._penL = self.C / self.norm[-1]
        C2 = self.C**2
        self._r_up = np.array([1.0, 0.0, self.C, self.b2]) / (2.0 * C2)
        self._r_dn = np.array([1.0, 0.0, -self.C, self.b2]) / (2.0 * C2)

    @property
    def dt_max(self) -> float:
        return self.cfl * self.dx / (self.C + abs(self.v))

    def zero_state(self) -> ModeState:
        z = np.zeros((4, self.n), dtype=complex)
        return ModeState(self.eta, 0.0, 0j, z, z.copy())

    def seeded_state(self, seed: SeedPerturbation) -> ModeState:
        st = self.zero_state()
        bump = seed.amplitude * np.exp(-0.5 * ((self.s - seed.center) / seed.width) ** 2)
        q = st.upper if seed.side == "+" else st.lower
        q[H] = bump
        q[B2] = self.b2 * bump
        if seed.direction:
            # p = C^2 bump travelling along +/- |x3| means v3 = +/- C bump in the outward sense
            sgn = 1.0 if seed.side == "+" else -1.0
            q[V3] = seed.direction * sgn * self.C * bump
        return st

    def pressure(self, q: np.ndarray) -> np.ndarray:
        p = self.params
        return p.c**2 * q[H] + (p.b2 / p.rho) * q[B2]

    def interface_values(self, state: ModeState):
        """Solve the jump conditions with the outgoing characteristics.

        Returns (P, v3_plus, v3_minus): the common pressure and the one-sided
        normal velocities at the sheet.
        """
        C = self.C
        pu, pl = self.pressure(state.upper[:, :1])[0], self.pressure(state.lower[:, :1])[0]
        a = pu - C * state.upper[V3, 0]
        b = pl + C * state.lower[V3, 0]
        jump = 2j * self.v * self.eta * state.f
        P = 0.5 * (C * jump + a + b)
        return P, (P - a) / C, (b - P) / C

    def rhs(self, state: ModeState):
        C, v, eta = self.C, self.v, self.eta
        out = []
        P, v3p, v3m = self.interface_values(state)
        for q, sgn in ((state.upper, 1.0), (state.lower, -1.0)):
            p = self.pressure(q)
            # d/dx3 = sgn * d/ds, side velocity = sgn * v
            Dp = sgn * sbp_derivative(p, self.dx)
            Dv3 = sgn * sbp_derivative(q[V3], self.dx)
            adv = -1j * sgn * v * eta
            div = 1j * eta * q[V1] + Dv3
            dq = np.empty_like(q)
            dq[H] = adv * q[H] - div
            dq[V1] = adv * q[V1] - 1j * eta * p
            dq[V3] = adv * q[V3] - Dp
            dq[B2] = adv * q[B2] - self.b2 * div
            if sgn > 0:
                w0, g0, r0 = p[0] + C * q[V3, 0], P + C * v3p, self._r_up
                wL, rL = p[-1] - C * q[V3, -1], self._r_dn
            else:
                w0, g0, r0 = p[0] - C * q[V3, 0], P - C * v3m, self._r_dn
                wL, rL = p[-1] + C * q[V3, -1], self._r_up
            dq[:, 0] -= self._pen0 * (w0 - g0) * r0
            dq[:, -1] -= self._penL * wL * rL
            out.append(dq)
        df = v3p - 1j * v * eta * state.f
        return df, out[0], out[1]

    def step(self, state: ModeState, dt: float) -> ModeState:
        """One classical RK4 step."""
        if not (0 < dt <= self.dt_max * (1 + 1e-12)):
            raise StepSizeError(
                f"dt={dt:.4g} violates CFL bound {self.dt_max:.4g} (cfl={self.cfl})")

        def add(st, k, c):
            return ModeState(st.eta, st.t, st.f + c * k[0], st.upper + c * k[1], st.lower + c * k[2])

        k1 = self.rhs(state)
        k2 = self.rhs(add(state, k1, 0.5 * dt))
        k3 = self.rhs(add(state, k2, 0.5 * dt))
        k4 = self.rhs(add(state, k3, dt))
        f = state.f + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        up = state.upper + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        lo = state.lower + dt / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        return ModeState(state.eta, state.t + dt, f, up, lo)

    def energy_profile(self, state: ModeState) -> np.ndarray:
        """Pointwise acoustic-type energy density summed over both sides."""
        e = np.zeros(self.n)
        for q in (state.upper, state.lower):
            p = self.pressure(q)
            e += (np.abs(p) ** 2 / self.C**2 + np.abs(q[V1]) ** 2 + np.abs(q[V3]) ** 2
                  + np.abs(q[B2] - self.b2 * q[H]) ** 2)
        return e

    def outer_energy_fraction(self, state: ModeState, fraction: float = 0.1) -> float:
        e = self.energy_profile(state) * self.norm
        tot = float(np.sum(e))
        if tot == 0:
            return 0.0
        return float(np.sum(e[self.s >= (1 - fraction) * self.L]) / tot)

    def interface_residual(self, state: ModeState) -> float:
        """Mismatch of the two one-sided front velocities, relative to the sheet state."""
        v, eta = self.v, self.eta
        up = state.upper[V3, 0] - 1j * v * eta * state.f
        lo = state.lower[V3, 0] + 1j * v * eta * state.f
        p0 = self.pressure(state.upper[:, :1])[0]
        scale = math.sqrt(abs(p0 / self.C) ** 2 + abs(state.upper[V3, 0]) ** 2
                          + abs(state.lower[V3, 0]) ** 2 + abs(v * eta * state.f) ** 2)
        return float(abs(up - lo) / scale) if scale > 0 else 0.0


@dataclass
class Trajectory:
    t: np.ndarray
    f: np.ndarray
    interface_residual: np.ndarray
    outer_energy: float


@dataclass
class GrowthReport:
    eta: float
    rate: Optional[complex]
    predicted: complex
    rel_error: Optional[float]
    null_run: bool
    regime: str
    trajectory: Optional[Trajectory] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        r = self.rate
        return {
            "eta": self.eta,
            "rate_re": None if r is None else r.real,
            "rate_im": None if r is None else r.imag,
            "predicted_re": self.predicted.real,
            "predicted_im": self.predicted.imag,
            "rel_error": self.rel_error,
            "null_run": self.null_run,
            "regime": self.regime,
        }


def predicted_rate(params: MediumParams, eta: float) -> complex:
    """Growth rate eta*sqrt(-X1^2) (unstable) or oscillation i*eta*X1 (stable)."""
    x1_sq, _ = closed_form_squares(params.v_plus, params.C_B)
    a = abs(eta)
    if x1_sq < 0:
        return complex(a * math.sqrt(-x1_sq), 0.0)
    return complex(0.0, a * math.sqrt(x1_sq))


def matrix_pencil(t: np.ndarray, f: np.ndarray, rank_tol: float = 1e-3, max_rank: int = 6,
                  target_samples: int = 200):
    """Exponents and amplitudes of a sum of exponentials fitted to uniform samples.

    SVD-truncated matrix pencil; the model order is the number of singular
    values above ``rank_tol`` times the largest (at most ``max_rank``).
    Samples are decimated to about ``target_samples`` first.
    """
    dec = max(1, f.size // target_samples)
    t, f = t[::dec], f[::dec]
    dt = t[1] - t[0]
    n = f.size
    L = n // 3
    Y = np.array([f[k:k + L + 1] for k in range(n - L)])
    _, S, Vh = np.linalg.svd(Y, full_matrices=False)
    r = int(min(max_rank, max(1, np.count_nonzero(S > rank_tol * S[0]))))
    V = Vh[:r].T
    z = np.linalg.eigvals(np.linalg.pinv(V[:-1]) @ V[1:])
    z = z[np.abs(z) > 0]
    amp = np.linalg.lstsq(np.power.outer(z, np.arange(n)).T, f, rcond=None)[0]
    return np.log(z.astype(complex)) / dt, amp


def fit_rate(t: np.ndarray, f: np.ndarray, start_fraction: float = 0.5,
             beat_tol: float = 4.0, stationary_tol: float = 1e-2) -> complex:
    """Least-squares slopes of log|f| and of the unwrapped phase over the tail.

    The unwrapped phase is only meaningful when one exponential dominates.
    If |f| (with the fitted growth removed) is strongly modulated, the
    frequency comes from a matrix-pencil fit instead: the
    largest-amplitude exponent with |lambda| > stationary_tol.  This keeps a
    stationary offset (supersonic sheets admit a steady Mach-wave pattern)
    and counter-rotating pairs from corrupting the estimate.
    """
    i0 = int(start_fraction * (t.size - 1))
    tt, ff = t[i0:], f[i0:]
    mag = np.abs(ff)
    good = mag > 0
    if np.count_nonzero(good) < 3:
        raise DomainError("too few nonzero samples to fit a rate")
    re = np.polyfit(tt[good], np.log(mag[good]), 1)[0]
    flat = mag * np.exp(-re * (tt - tt[0]))
    if np.all(good) and np.max(flat) / np.min(flat) <= beat_tol:
        im = np.polyfit(tt, np.unwrap(np.angle(ff)), 1)[0]
        return complex(re, im)
    lam, amp = matrix_pencil(tt, ff)
    keep = np.abs(lam) > stationary_tol
    if not np.any(keep):
        return complex(re, 0.0)
    k = np.flatnonzero(keep)[int(np.argmax(np.abs(amp[keep])))]
    return complex(re, lam[k].imag)


def required_length(params: MediumParams, T_final: float, support: float) -> float:
    return (params.C_B + abs(params.v_plus)) * T_final + support


def run_mode(eta: float, params: MediumParams, T_final: float,
             seed: Optional[SeedPerturbation] = None, n_cells: int = 2048,
             cfl: float = CFL_DEFAULT, L: Optional[float] = None,
             samples: int = 2000, reflection_tol: float = 1e-6,
             fit_start: float = 0.5) -> GrowthReport:
    """Integrate one mode from a seeded perturbation and fit exp(lambda t) to f."""
    if eta == 0:
        raise DomainError("run_mode needs eta != 0")
    if T_final <= 0:
        raise DomainError("T_final must be positive")
    seed = SeedPerturbation() if seed is None else seed
    need = required_length(params, T_final, seed.support)
    if L is None:
        L = need
    elif L < need:
        raise DomainError(f"domain L={L:g} shorter than required {need:g}")
    sysm = ModeSystem(params, eta, L, n_cells, cfl)
    state = sysm.seeded_state(seed)
    regime = classify_regime(params).tag.value
    pred = predicted_rate(params, eta)
    if state.is_zero():
        return GrowthReport(eta, None, pred, None, True, regime)

    n_steps = max(1, math.ceil(T_final / sysm.dt_max))
    dt = T_final / n_steps
    every = max(1, n_steps // samples)
    ts, fs, res = [0.0], [state.f], [sysm.interface_residual(state)]
    outer = 0.0
    for k in range(1, n_steps + 1):
        state = sysm.step(state, dt)
        if k % every == 0 or k == n_steps:
            ts.append(state.t)
            fs.append(state.f)
            res.append(sysm.interface_residual(state))
            outer = max(outer, sysm.outer_energy_fraction(state))
    if not np.isfinite(state.f) or outer > reflection_tol:
        raise InvalidRunError(
            f"energy fraction {outer:.2e} in the outer 10% exceeds {reflection_tol:g}: "
            "domain too small")
    traj = Trajectory(np.array(ts), np.array(fs), np.array(res), outer)
    rate = fit_rate(traj.t, traj.f, fit_start)
    if pred.real > 0:
        err = abs(rate.real - pred.real) / pred.real
    elif pred.imag > 0:
        err = abs(abs(rate.imag) - pred.imag) / pred.imag
    else:
        err = None
    return GrowthReport(eta, rate, pred, err, False, regime, traj)


@dataclass(frozen=True)
class ScanRow:
    v: float
    M_B: float
    rate_re: float
    rate_im: float
    predicted_re: float
    growing: bool


def scan_threshold(c: float, rho: float, b2: float, eta: float, v_list: Sequence[float],
                   T_final: float = 60.0, noise_floor: float = 0.02, n_cells: int = 2048,
                   seed: Optional[SeedPerturbation] = None, jobs: int = 1) -> List[ScanRow]:
    """Measured growth against v; ``growing`` means Re(lambda) > noise_floor*|eta|*C_B."""
    args = [(float(v), c, rho, b2, eta, T_final, noise_floor, n_cells, seed) for v in v_list]
    if jobs > 1 and len(args) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(jobs) as ex:
            return list(ex.map(_scan_one, args))
    return [_scan_one(a) for a in args]


def _scan_one(a) -> ScanRow:
    v, c, rho, b2, eta, T_final, noise_floor, n_cells, seed = a
    p = derive_params(v, c, rho, b2)
    rep = run_mode(eta, p, T_final, seed, n_cells)
    r = rep.rate if rep.rate is not None else 0j
    return ScanRow(v, p.M_B, r.real, r.imag, rep.predicted.real,
                   r.real > noise_floor * abs(eta) * p.C_B)


def bracket_threshold(rows: Sequence[ScanRow]):
    """Consecutive (v_grow, v_stable) pair where growth stops, or None."""
    rows = sorted(rows, key=lambda r: r.v)
    for a, b in zip(rows, rows[1:]):
        if a.growing and not b.growing:
            return a.v, b.v
    return None
