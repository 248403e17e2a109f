"""Front equation on a discrete (delta, eta) lattice and weighted Sobolev norms.

The Laplace transform in time is realised as the weight ``exp(-gamma t)``
on a finite window followed by a 2-D FFT, with the continuous-transform
normalisation ``u_hat = dt*dx*fft2(u_tilde)``.  Lattice spacings are
``2*pi/T_win`` and ``2*pi/X_win``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional

import numpy as np

from .errors import DomainError, NearSingularError
from .params import MediumParams, Regime, classify_regime
from .quadrature import gl_panels
from .symbol import mu_array, sigma_array

FLOOR_TOL = 1e-8
WINDOW_TOL = 1e-8


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class SpectralGrid:
    """Time window [0, T_win) and x1 window [-X_win/2, X_win/2)."""

    T_win: float = 40.0
    n_t: int = 256
    X_win: float = 40.0
    n_x: int = 128
    gamma: float = 1.0

    def __post_init__(self):
        if not (_is_pow2(self.n_t) and _is_pow2(self.n_x)):
            raise DomainError(f"n_t and n_x must be powers of two, got {self.n_t}, {self.n_x}")
        if self.T_win <= 0 or self.X_win <= 0:
            raise DomainError("window lengths must be positive")
        if not self.gamma >= 1.0:
            raise DomainError(f"gamma must be >= 1, got {self.gamma}")

    @property
    def dt(self) -> float:
        return self.T_win / self.n_t

    @property
    def dx(self) -> float:
        return self.X_win / self.n_x

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.n_t) * self.dt

    @property
    def x1(self) -> np.ndarray:
        return -0.5 * self.X_win + np.arange(self.n_x) * self.dx

    @property
    def d_delta(self) -> float:
        return 2.0 * math.pi / self.T_win

    @property
    def d_eta(self) -> float:
        return 2.0 * math.pi / self.X_win

    def lattice(self):
        """(delta, eta) arrays of shape (n_t, n_x) in FFT order."""
        delta = 2.0 * math.pi * np.fft.fftfreq(self.n_t, self.dt)
        eta = 2.0 * math.pi * np.fft.fftfreq(self.n_x, self.dx)
        return np.meshgrid(delta, eta, indexing="ij")

    def lam2(self) -> np.ndarray:
        d, e = self.lattice()
        return self.gamma**2 + d**2 + e**2

    def with_gamma(self, gamma: float) -> "SpectralGrid":
        return replace(self, gamma=float(gamma))

    def weight(self) -> np.ndarray:
        return np.exp(-self.gamma * self.t)[:, None]

    def transform(self, u: np.ndarray) -> np.ndarray:
        """Fourier transform of exp(-gamma t) u; trailing axes are (t, x1)."""
        return self.dt * self.dx * np.fft.fft2(u * self.weight(), axes=(-2, -1))

    def inverse(self, u_hat: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`transform` without the weight (returns u_tilde)."""
        return np.fft.ifft2(u_hat, axes=(-2, -1)) / (self.dt * self.dx)


def _hat_norm2(u_hat: np.ndarray, grid: SpectralGrid, s: float) -> np.ndarray:
    w = grid.lam2() ** s
    meas = grid.d_delta * grid.d_eta / (2.0 * math.pi) ** 2
    return meas * np.sum(w * np.abs(u_hat) ** 2, axis=(-2, -1))


def sobolev_norm(u: np.ndarray, s: float, grid: SpectralGrid) -> float:
    """||u||_{H^s_gamma} by discrete Plancherel; ``u`` is sampled on ``grid``."""
    u = np.asarray(u)
    if u.shape[-2:] != (grid.n_t, grid.n_x):
        raise DomainError(f"samples of shape {u.shape} do not match the grid")
    return float(math.sqrt(_hat_norm2(grid.transform(u), grid, s)))


@dataclass
class ForcingField:
    """Source terms on both sides, sampled at x3-nodes ``y`` (distance from the sheet)."""

    grid: SpectralGrid
    y: np.ndarray
    y_weights: np.ndarray
    K_plus: np.ndarray   # (n_y, n_t, n_x)
    K_minus: np.ndarray
    source: str = "custom"
    meta: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        shape = (self.y.size, self.grid.n_t, self.grid.n_x)
        for name in ("K_plus", "K_minus"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise DomainError(f"{name} has shape {arr.shape}, expected {shape}")
            setattr(self, name, arr)

    def scaled(self, k: float) -> "ForcingField":
        return replace(self, K_plus=k * self.K_plus, K_minus=k * self.K_minus)

    def with_grid(self, grid: SpectralGrid) -> "ForcingField":
        if (grid.n_t, grid.n_x, grid.T_win, grid.X_win) != (
                self.grid.n_t, self.grid.n_x, self.grid.T_win, self.grid.X_win):
            raise DomainError("with_grid may only change gamma")
        return replace(self, grid=grid)

    def window_residual(self) -> float:
        """Largest edge value (t, x1 and far x3) relative to the peak."""
        peak = max(np.max(np.abs(self.K_plus)), np.max(np.abs(self.K_minus)))
        if peak == 0:
            return 0.0
        edge = 0.0
        for K in (self.K_plus, self.K_minus):
            edge = max(edge, np.max(np.abs(K[:, 0, :])), np.max(np.abs(K[:, -1, :])),
                       np.max(np.abs(K[:, :, 0])), np.max(np.abs(K[:, :, -1])),
                       np.max(np.abs(K[-1])))
        return float(edge / peak)

    def norm2(self, s: float, gamma: Optional[float] = None) -> float:
        """||K+||^2 + ||K-||^2 in L^2(R+-; H^s_gamma)."""
        grid = self.grid if gamma is None else self.grid.with_gamma(gamma)
        tot = 0.0
        for K in (self.K_plus, self.K_minus):
            per_y = _hat_norm2(grid.transform(K), grid, s)
            tot += float(np.sum(self.y_weights * per_y))
        return tot

    def is_zero(self) -> bool:
        return not (np.any(self.K_plus) or np.any(self.K_minus))


def gaussian_forcing(grid: Optional[SpectralGrid] = None, amplitude: float = 1.0,
                     t0: float = 4.0, sigma_t: float = 0.5, sigma_x: float = 1.0,
                     y0: float = 0.0, sigma_y: float = 0.35, minus_scale: float = 0.5,
                     y_order: int = 16) -> ForcingField:
    """Separable Gaussian source; the lower side is a scaled mirror image."""
    grid = grid or SpectralGrid()
    y_max = y0 + 8.0 * sigma_y
    y, w = gl_panels(0.0, y_max, sigma_y, y_order)
    tt = np.exp(-0.5 * ((grid.t - t0) / sigma_t) ** 2)
    xx = np.exp(-0.5 * (grid.x1 / sigma_x) ** 2)
    yy = np.exp(-0.5 * ((y - y0) / sigma_y) ** 2)
    K = amplitude * yy[:, None, None] * tt[None, :, None] * xx[None, None, :]
    meta = dict(amplitude=amplitude, t0=t0, sigma_t=sigma_t, sigma_x=sigma_x,
                y0=y0, sigma_y=sigma_y, minus_scale=minus_scale)
    return ForcingField(grid, y, w, K, minus_scale * K, "gaussian", meta)


def zero_forcing(grid: Optional[SpectralGrid] = None, n_y: int = 16) -> ForcingField:
    grid = grid or SpectralGrid()
    y, w = gl_panels(0.0, 1.0, 1.0, n_y)
    z = np.zeros((y.size, grid.n_t, grid.n_x))
    return ForcingField(grid, y, w, z, z.copy(), "zero")


PRESETS = {"gaussian": gaussian_forcing, "zero": zero_forcing}


def _trapezoid_weights(y: np.ndarray) -> np.ndarray:
    if y.size == 1:
        return np.ones(1)
    w = np.zeros_like(y)
    d = np.diff(y)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w


def load_forcing_csv(path: str, grid: SpectralGrid) -> ForcingField:
    """Read rows (t, x1, x3, side, K_value) sampled on the grid's (t, x1) lattice.

    ``side`` is ``+`` or ``-``; x3 is signed (lower side uses x3 <= 0).  Both
    sides must share the same set of |x3| nodes, integrated by the
    trapezoidal rule.  Missing lattice points are zero.
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(row for row in fh if not row.lstrip().startswith("#"))
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:5]] != ["t", "x1", "x3", "side", "K_value"]:
            raise DomainError(f"{path}: expected header t,x1,x3,side,K_value")
        for rec in reader:
            if not rec:
                continue
            t, x1, x3, side, val = rec[:5]
            side = side.strip()
            if side not in ("+", "-"):
                raise DomainError(f"{path}: bad side {side!r}")
            rows.append((float(t), float(x1), abs(float(x3)), side, float(val)))
    if not rows:
        raise DomainError(f"{path}: no data rows")
    ys = np.array(sorted({r[2] for r in rows}))
    Kp = np.zeros((ys.size, grid.n_t, grid.n_x))
    Km = np.zeros_like(Kp)
    for t, x1, y, side, val in rows:
        j = int(round(t / grid.dt))
        k = int(round((x1 + 0.5 * grid.X_win) / grid.dx))
        if not (0 <= j < grid.n_t and 0 <= k < grid.n_x):
            raise DomainError(f"{path}: sample (t={t}, x1={x1}) lies outside the window")
        if abs(j * grid.dt - t) > 1e-6 * grid.dt or abs(grid.x1[k] - x1) > 1e-6 * grid.dx:
            raise DomainError(f"{path}: sample (t={t}, x1={x1}) is off the lattice")
        i = int(np.searchsorted(ys, y))
        (Kp if side == "+" else Km)[i, j, k] = val
    return ForcingField(grid, ys, _trapezoid_weights(ys), Kp, Km, f"file:{path}")


@dataclass
class FrontSolution:
    grid: SpectralGrid
    f_hat: np.ndarray
    f_tilde: np.ndarray   # exp(-gamma t) f, real
    g_hat: np.ndarray
    sigma: np.ndarray
    norms: List[dict] = field(default_factory=list)
    imag_ratio: float = 0.0

    @property
    def f(self) -> np.ndarray:
        """Physical front exp(gamma t) * f_tilde (trustworthy while that factor is moderate)."""
        return self.f_tilde * np.exp(self.grid.gamma * self.grid.t)[:, None]

    def norm(self, s: float) -> float:
        return float(math.sqrt(_hat_norm2(self.f_hat, self.grid, s)))


def symbol_on_lattice(grid: SpectralGrid, params: MediumParams):
    d, e = grid.lattice()
    tau = grid.gamma + 1j * d
    mp = mu_array(params.v_plus, tau, e, params.C_B)
    mm = mu_array(-params.v_plus, tau, e, params.C_B)
    return tau, e, mp, mm, params.C_B**2 * (mp * mm - e**2)


def _check_floor(sig: np.ndarray, grid: SpectralGrid, floor_tol: float):
    ratio = np.abs(sig) / grid.lam2()
    k = np.unravel_index(int(np.argmin(ratio)), ratio.shape)
    if ratio[k] < floor_tol:
        d, e = grid.lattice()
        raise NearSingularError(
            f"|Sigma|/Lambda^2 = {ratio[k]:.3e} < {floor_tol:g} at mode "
            f"(gamma={grid.gamma:g}, delta={d[k]:.6g}, eta={e[k]:.6g}), index {k}"
        )


def _conj_symmetrize(a_hat: np.ndarray) -> np.ndarray:
    """Project onto spectra of real signals: (a(k) + conj a(-k)) / 2."""
    refl = np.roll(np.flip(a_hat, axis=(-2, -1)), 1, axis=(-2, -1))
    return 0.5 * (a_hat + np.conj(refl))


def divide_symbol(g_hat: np.ndarray, grid: SpectralGrid, params: MediumParams,
                  floor_tol: float = FLOOR_TOL):
    """f_hat = g_hat / Sigma with the near-singularity check."""
    sig = symbol_on_lattice(grid, params)[-1]
    _check_floor(sig, grid, floor_tol)
    return g_hat / sig, sig


def front_rhs(forcing: ForcingField, params: MediumParams) -> np.ndarray:
    """g_hat = -C^2 mu+ mu- / (mu+ + mu-) * W on the lattice."""
    grid = forcing.grid
    _, _, mp, mm, _ = symbol_on_lattice(grid, params)
    C2 = params.C_B**2
    Ip = np.zeros((grid.n_t, grid.n_x), dtype=complex)
    Im = np.zeros_like(Ip)
    for k, (y, w) in enumerate(zip(forcing.y, forcing.y_weights)):
        Ip += w * np.exp(-mp * y) * grid.transform(forcing.K_plus[k])
        Im += w * np.exp(-mm * y) * grid.transform(forcing.K_minus[k])
    W = (Ip / mp - Im / mm) / C2
    g_hat = -C2 * mp * mm / (mp + mm) * W
    # Nyquist lines have no conjugate partner, so a real front cannot carry them
    g_hat[grid.n_t // 2, :] = 0.0
    g_hat[:, grid.n_x // 2] = 0.0
    return g_hat


def solve_front(forcing: ForcingField, s=(0, 1), gamma: Optional[float] = None,
                params: Optional[MediumParams] = None,
                floor_tol: float = FLOOR_TOL) -> FrontSolution:
    if params is None:
        raise DomainError("solve_front needs medium parameters")
    if gamma is not None:
        forcing = forcing.with_grid(forcing.grid.with_gamma(gamma))
    grid = forcing.grid
    g_hat = front_rhs(forcing, params)
    f_hat, sig = divide_symbol(g_hat, grid, params, floor_tol)
    f_hat = _conj_symmetrize(f_hat)
    raw = grid.inverse(f_hat)
    amp = float(np.max(np.abs(raw)))
    imag_ratio = float(np.max(np.abs(raw.imag)) / amp) if amp > 0 else 0.0
    sol = FrontSolution(grid, f_hat, raw.real, g_hat, sig, imag_ratio=imag_ratio)
    for sv in np.atleast_1d(s):
        sol.norms.append({"s": float(sv), "gamma": grid.gamma, "value": sol.norm(float(sv))})
    return sol


@dataclass(frozen=True)
class EstimateRow:
    gamma: float
    lhs: Optional[float]
    rhs: Optional[float]
    ratio: Optional[float]
    g_norm: Optional[float]
    chain_ratio: Optional[float]
    g_bound_ratio: Optional[float]

    def as_tuple(self):
        return (self.gamma, self.lhs, self.rhs, self.ratio, self.g_norm, self.chain_ratio)


def estimate_report(forcing: ForcingField, s: float, gamma_list, params: MediumParams,
                    floor_tol: float = FLOOR_TOL) -> List[EstimateRow]:
    """Measured constants of the a priori estimate for each gamma.

    lhs = gamma^3 ||f||^2_{s+1}, rhs = ||K+||^2 + ||K-||^2 (H^s), ratio = lhs/rhs;
    g_norm = ||g||^2_s, chain_ratio = gamma^2 ||f||^2_{s+1} / ||g||^2_s and
    g_bound_ratio = gamma ||g||^2_s / rhs.
    """
    if classify_regime(params).tag is not Regime.STABLE:
        raise DomainError("estimate_report needs stable parameters (M_B > sqrt(2))")
    rows = []
    for gamma in gamma_list:
        if gamma < 1:
            raise DomainError(f"gamma must be >= 1, got {gamma}")
        if forcing.is_zero():
            rows.append(EstimateRow(float(gamma), None, None, None, None, None, None))
            continue
        sol = solve_front(forcing, s=(s + 1,), gamma=gamma, params=params, floor_tol=floor_tol)
        fn = sol.norm(s + 1) ** 2
        gn = float(_hat_norm2(sol.g_hat, sol.grid, s))
        kn = forcing.norm2(s, gamma)
        lhs = gamma**3 * fn
        rows.append(EstimateRow(float(gamma), lhs, kn, lhs / kn, gn, gamma**2 * fn / gn,
                                gamma * gn / kn))
    return rows


def symbol_bound(grid: SpectralGrid, params: MediumParams) -> float:
    """Lattice supremum of |Sigma| / Lambda^2."""
    sig = symbol_on_lattice(grid, params)[-1]
    return float(np.max(np.abs(sig) / grid.lam2()))
