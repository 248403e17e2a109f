"""Interface trace system and interior profiles for one frequency.

Forcing callables ``Khat(y)`` always take the distance ``y >= 0`` from the
interface: on the lower side ``Khat_minus(y)`` stands for the transformed
source at ``x3 = -y``.

With ``I+/- = int_0^inf exp(-mu+/- y) Khat+/-(y) dy`` the four interface
relations read

    C^2 h+(0) - C^2 h-(0)      = 0
    C^2 h+'(0) - C^2 h-'(0)    = -4 i tau eta v f
    mu+ h+(0) + h+'(0)         = I+ / C^2
    mu- h-(0) - h-'(0)         = I- / C^2

where primes are d/dx3.  Eliminating gives

    C^2 (h+'(0) + h-'(0)) = -4 i tau eta v f (mu+ - mu-)/(mu+ + mu-)
                            + 2 C^2 mu+ mu- / (mu+ + mu-) * W

with ``W = (I+/mu+ - I-/mu-) / C^2``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateFrequencyError, DomainError, GrowthWarning, TruncationWarning
from .params import MediumParams
from .quadrature import cell_rule, gl_panels
from .symbol import Frequency, mu

Forcing = Optional[Callable[[np.ndarray], np.ndarray]]

DECAY_TARGET = 1e-14


@dataclass(frozen=True)
class WResult:
    value: complex
    i_plus: complex
    i_minus: complex
    truncation: float
    y_max: float


def _eval(K: Forcing, y: np.ndarray) -> np.ndarray:
    if K is None:
        return np.zeros_like(y, dtype=complex)
    return np.asarray(K(y), dtype=complex) * np.ones_like(y)


def laplace_integral(K: Forcing, m: complex, y_max: Optional[float] = None,
                     order: int = 16, tail_tol: float = 1e-10):
    """int_0^y_max exp(-m y) K(y) dy and a bound on the neglected tail."""
    if m.real <= 0:
        raise DomainError(f"integral needs Re(mu) > 0, got {m}")
    if y_max is None:
        y_max = -math.log(DECAY_TARGET) / m.real
    width = min(1.0, 4.0 / max(abs(m), 1e-300))
    y, w = gl_panels(0.0, y_max, width, order)
    Ky = _eval(K, y)
    value = complex(np.sum(w * np.exp(-m * y) * Ky))
    k_end = abs(complex(_eval(K, np.array([y_max]))[0]))
    peak = float(np.max(np.abs(Ky))) if Ky.size else 0.0
    if k_end > tail_tol * max(peak, 1e-300) and k_end > 0:
        warnings.warn(
            f"forcing has not decayed at y_max={y_max:.3g} (|K|={k_end:.3g})", TruncationWarning
        )
    trunc = k_end * math.exp(-m.real * y_max) / m.real
    return value, trunc, y_max


def compute_W(Khat_plus: Forcing, Khat_minus: Forcing, freq: Frequency, params: MediumParams,
              y_max: Optional[float] = None, order: int = 16,
              tail_tol: float = 1e-10) -> WResult:
    """Forcing functional W(tau, eta) by composite Gauss-Legendre quadrature."""
    if freq.gamma < 1.0:
        raise DomainError(f"compute_W requires gamma >= 1, got {freq.gamma}")
    C2 = params.C_B**2
    mp, mm = mu("+", freq, params), mu("-", freq, params)
    ip, tp, yp = laplace_integral(Khat_plus, mp, y_max, order, tail_tol)
    im, tm, ym = laplace_integral(Khat_minus, mm, y_max, order, tail_tol)
    W = (ip / mp - im / mm) / C2
    trunc = (tp / abs(mp) + tm / abs(mm)) / C2
    return WResult(W, ip, im, trunc, max(yp, ym))


@dataclass(frozen=True)
class TraceData:
    h_plus_0: complex
    h_minus_0: complex
    dh_plus_0: complex
    dh_minus_0: complex
    f_hat: complex
    W: complex
    i_plus: complex
    i_minus: complex
    b2: float = 0.0

    @property
    def B2_plus_0(self) -> complex:
        # linearised induction: B2 = b2 * h in the interior and on the trace
        return self.b2 * self.h_plus_0

    @property
    def B2_minus_0(self) -> complex:
        return self.b2 * self.h_minus_0

    def to_dict(self) -> dict:
        out = {}
        for k in ("h_plus_0", "h_minus_0", "dh_plus_0", "dh_minus_0", "f_hat", "W",
                  "i_plus", "i_minus", "B2_plus_0", "B2_minus_0"):
            z = complex(getattr(self, k))
            out[k] = [z.real, z.imag]
        return out


def _system(freq: Frequency, params: MediumParams, mp: complex, mm: complex):
    C2 = params.C_B**2
    A = np.array([
        [C2, -C2, 0, 0],
        [0, 0, C2, -C2],
        [mp, 0, 1, 0],
        [0, mm, 0, -1],
    ], dtype=complex)
    return A


def _rhs(f_hat, i_plus, i_minus, freq, params):
    C2 = params.C_B**2
    return np.array([
        0.0,
        -4j * freq.tau * freq.eta * f_hat * params.v_plus,
        i_plus / C2,
        i_minus / C2,
    ], dtype=complex)


def solve_jump_system(f_hat: complex, i_plus: complex, i_minus: complex,
                      freq: Frequency, params: MediumParams) -> TraceData:
    """Solve the four interface relations for the traces h+/-(0), h+/-'(0).

    ``i_plus``/``i_minus`` are the Laplace integrals of the forcing (the
    components of W, see :func:`compute_W`).
    """
    mp, mm = mu("+", freq, params), mu("-", freq, params)
    if abs(mp + mm) <= 1e-14 * (abs(mp) + abs(mm)):
        raise DegenerateFrequencyError(
            f"mu+ + mu- = 0 at tau={freq.tau}, eta={freq.eta}: interface system is singular"
        )
    A = _system(freq, params, mp, mm)
    b = _rhs(f_hat, i_plus, i_minus, freq, params)
    try:
        x = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise DegenerateFrequencyError(str(exc)) from None
    C2 = params.C_B**2
    W = (i_plus / mp - i_minus / mm) / C2 if mp != 0 and mm != 0 else complex("nan")
    return TraceData(complex(x[0]), complex(x[1]), complex(x[2]), complex(x[3]),
                     complex(f_hat), complex(W), complex(i_plus), complex(i_minus), params.b2)


def trace_identity(td: TraceData, freq: Frequency, params: MediumParams) -> float:
    """Normalised residual of the trace identity and of the interface relations."""
    mp, mm = mu("+", freq, params), mu("-", freq, params)
    C2 = params.C_B**2
    lhs = C2 * (td.dh_plus_0 + td.dh_minus_0)
    t1 = -4j * freq.tau * freq.eta * td.f_hat * params.v_plus * (mp - mm) / (mp + mm)
    t2 = 2.0 * C2 * mp * mm / (mp + mm) * td.W
    scale = abs(C2 * td.dh_plus_0) + abs(C2 * td.dh_minus_0) + abs(t1) + abs(t2)
    r_ident = abs(lhs - t1 - t2) / scale if scale > 0 else 0.0

    x = np.array([td.h_plus_0, td.h_minus_0, td.dh_plus_0, td.dh_minus_0])
    A = _system(freq, params, mp, mm)
    b = _rhs(td.f_hat, td.i_plus, td.i_minus, freq, params)
    rows = np.abs(A) @ np.abs(x) + np.abs(b)
    s = float(np.max(rows))
    r_sys = float(np.max(np.abs(A @ x - b))) / s if s > 0 else 0.0
    return max(r_ident, r_sys)


@dataclass(frozen=True)
class InteriorProfile:
    side: str
    x3: np.ndarray
    h: np.ndarray
    mu: complex
    ode_residual: np.ndarray
    bounded: bool
    growth_coefficient: complex

    @property
    def dx(self) -> float:
        return abs(self.x3[1] - self.x3[0])


def reconstruct_profile(td: TraceData, Khat: Forcing, side: str, freq: Frequency,
                        params: MediumParams, L: float, n_points: int,
                        growth_tol: float = 1e-8) -> InteriorProfile:
    """Sample h on [0, L] (upper) or [-L, 0] (lower) from the traces.

    The hyperbolic-function representation is evaluated as
    ``a/2 e^{mu s} + (J_fwd + J_bwd)/(2 C^2 mu) + (h0 - h0'/mu)/2 e^{-mu s}``
    where ``a`` is the decay-condition residual, so well-posed data never
    involve a growing exponential.
    """
    if freq.gamma < 1.0:
        raise DomainError(f"reconstruct_profile requires gamma >= 1, got {freq.gamma}")
    if side not in ("+", "-"):
        raise DomainError(f"side must be '+' or '-', got {side!r}")
    m = mu(side, freq, params)
    C2 = params.C_B**2
    h0 = td.h_plus_0 if side == "+" else td.h_minus_0
    # derivative along the outward distance s = |x3|
    h1 = td.dh_plus_0 if side == "+" else -td.dh_minus_0

    s = np.linspace(0.0, L, n_points + 1)
    dx = s[1] - s[0]
    decay = np.exp(-m * dx)

    nodes, weights = cell_rule(s, order=8)
    Kc = _eval(Khat, nodes.ravel()).reshape(nodes.shape)
    # per-cell pieces: forward int_{s_j}^{s_j+1} e^{-m(s_{j+1}-y)} K, backward e^{-m(y-s_j)}
    fwd_piece = np.sum(weights * np.exp(-m * (s[1:, None] - nodes)) * Kc, axis=1)
    bwd_piece = np.sum(weights * np.exp(-m * (nodes - s[:-1, None])) * Kc, axis=1)

    tail, _, _ = laplace_integral(
        None if Khat is None else (lambda y: Khat(y + L)), m, tail_tol=np.inf
    )
    n = s.size
    J_fwd = np.zeros(n, dtype=complex)
    J_bwd = np.zeros(n, dtype=complex)
    for j in range(n - 1):
        J_fwd[j + 1] = decay * J_fwd[j] + fwd_piece[j]
    J_bwd[-1] = tail
    for j in range(n - 2, -1, -1):
        J_bwd[j] = decay * J_bwd[j + 1] + bwd_piece[j]

    a = h0 + h1 / m - J_bwd[0] / (C2 * m)
    scale = abs(h0) + abs(h1 / m) + abs(J_bwd[0] / (C2 * m))
    growing = scale > 0 and abs(a) > growth_tol * scale
    if growing:
        warnings.warn(
            f"traces violate the decay condition on side {side} (|a|={abs(a):.3g}); "
            "profile grows exponentially", GrowthWarning)
    with np.errstate(over="ignore", invalid="ignore"):
        grow = 0.5 * a * np.exp(m * s) if growing else 0.0
        h = grow + (J_fwd + J_bwd) / (2.0 * C2 * m) + 0.5 * (h0 - h1 / m) * np.exp(-m * s)
    h[0] = h0

    v = params.v_plus if side == "+" else -params.v_plus
    coef = (freq.tau + 1j * v * freq.eta) ** 2 + C2 * freq.eta**2
    res = np.full(n, np.nan, dtype=complex)
    Ks = _eval(Khat, s)
    res[1:-1] = coef * h[1:-1] - C2 * (h[2:] - 2 * h[1:-1] + h[:-2]) / dx**2 - Ks[1:-1]
    # with a = 0: |h(L)| <= |h0| + (|I| + |J_fwd(L) + J_bwd(L)|) / |2 C^2 mu|
    bound = abs(h0) + (abs(J_bwd[0]) + abs(J_fwd[-1] + J_bwd[-1])) / abs(2.0 * C2 * m)
    bounded = (not growing) and bool(np.all(np.isfinite(h))) and abs(h[-1]) <= bound * (1 + 1e-12)
    x3 = s if side == "+" else -s
    return InteriorProfile(side, x3, h, m, res, bounded, complex(a))
