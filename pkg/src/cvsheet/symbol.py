"""Decaying roots mu+/- and the front symbol on the frequency set.

Frequencies are ``tau = gamma + i*delta`` with ``gamma >= 0`` and a real
wavenumber ``eta``.  For ``gamma > 0`` the roots are principal square roots;
on ``gamma == 0`` they are the continuous extension, evaluated from an
explicit case table (mixed zone: real; sonic: zero; outside: imaginary with
the sign of ``delta + v*eta``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SingularFormError
from .params import MediumParams

SONIC_CLAMP = 1e-300


@dataclass(frozen=True)
class Frequency:
    gamma: float
    delta: float
    eta: float

    def __post_init__(self):
        if self.gamma < 0:
            raise DomainError(f"gamma must be >= 0, got {self.gamma}")
        if self.gamma == 0 and self.delta == 0 and self.eta == 0:
            raise DomainError("the origin (tau, eta) = (0, 0) is not a frequency")

    @classmethod
    def from_tau(cls, tau: complex, eta: float) -> "Frequency":
        tau = complex(tau)
        return cls(tau.real, tau.imag, float(eta))

    @property
    def tau(self) -> complex:
        return complex(self.gamma, self.delta)

    @property
    def lam(self) -> float:
        """Lambda = (|tau|^2 + eta^2)^(1/2)."""
        return math.sqrt(self.gamma**2 + self.delta**2 + self.eta**2)

    def on_hemisphere(self, tol: float = 1e-12) -> bool:
        return abs(self.lam - 1.0) <= tol

    def normalized(self) -> "Frequency":
        """Radial projection onto the unit hemisphere."""
        r = self.lam
        return Frequency(self.gamma / r, self.delta / r, self.eta / r)

    def scaled(self, k: float) -> "Frequency":
        return Frequency(k * self.gamma, k * self.delta, k * self.eta)


@dataclass(frozen=True)
class SymbolEval:
    mu_plus: complex
    mu_minus: complex
    sigma: complex
    on_boundary: bool


def mu_array(v_side: float, tau, eta, C_B: float) -> np.ndarray:
    """Vectorised decaying root for background velocity ``v_side``.

    ``tau`` and ``eta`` broadcast against each other.  Entries with
    ``Re tau == 0`` use the boundary case table.
    """
    tau = np.asarray(tau, dtype=complex)
    eta = np.asarray(eta, dtype=float)
    tau, eta = np.broadcast_arrays(tau, eta)
    shape = tau.shape
    tau, eta = tau.ravel(), eta.ravel()
    if np.any(tau.real < 0):
        raise DomainError("Re(tau) must be >= 0")
    if np.any((tau == 0) & (eta == 0)):
        raise DomainError("the origin (tau, eta) = (0, 0) is not a frequency")

    arg = (tau + 1j * v_side * eta) ** 2 / C_B**2 + eta**2
    out = np.sqrt(arg)

    edge = tau.real == 0
    if np.any(edge):
        d = tau.imag[edge] + v_side * eta[edge]
        ae = np.abs(eta[edge])
        # a = (d/C)^2 - eta^2, factored to keep sonic points exact
        a = (d / C_B - ae) * (d / C_B + ae)
        out[edge] = np.where(a < 0, np.sqrt(np.abs(a)) + 0j, 1j * np.sign(d) * np.sqrt(np.abs(a)))
        arg = arg.copy()
        arg[edge] = -a

    out[np.abs(arg) < SONIC_CLAMP] = 0.0
    return out.reshape(shape)


def dmu_dtau_array(v_side: float, tau, eta, mu, C_B: float) -> np.ndarray:
    """d(mu)/d(tau) = (tau + i v eta) / (C_B^2 mu), valid where mu != 0."""
    return (np.asarray(tau) + 1j * v_side * np.asarray(eta)) / (C_B**2 * np.asarray(mu))


def sigma_array(tau, eta, params: MediumParams) -> np.ndarray:
    """Symbol C_B^2 (mu+ mu- - eta^2), defined on all of the frequency set."""
    mp = mu_array(params.v_plus, tau, eta, params.C_B)
    mm = mu_array(-params.v_plus, tau, eta, params.C_B)
    return params.C_B**2 * (mp * mm - np.asarray(eta, dtype=float) ** 2)


def _side_velocity(side, params: MediumParams) -> float:
    if side in ("+", 1, +1):
        return params.v_plus
    if side in ("-", -1):
        return -params.v_plus
    raise DomainError(f"side must be '+' or '-', got {side!r}")


def mu(side, freq: Frequency, params: MediumParams) -> complex:
    return complex(mu_array(_side_velocity(side, params), freq.tau, freq.eta, params.C_B))


def sigma(freq: Frequency, params: MediumParams) -> SymbolEval:
    mp = mu("+", freq, params)
    mm = mu("-", freq, params)
    s = params.C_B**2 * (mp * mm - freq.eta**2)
    return SymbolEval(mp, mm, s, freq.gamma == 0)


def sigma_form1(freq: Frequency, params: MediumParams) -> complex:
    """Symbol in its original ratio form; singular where mu+ + mu- = 0."""
    mp = mu("+", freq, params)
    mm = mu("-", freq, params)
    tau, eta, v = freq.tau, freq.eta, params.v_plus
    denom = mp + mm
    if abs(denom) <= 1e-14 * (abs(mp) + abs(mm)):
        raise SingularFormError(
            f"mu+ + mu- = 0 at tau={tau}, eta={eta}; use the product form"
        )
    return tau**2 - v**2 * eta**2 - 2j * tau * eta * v * (mp - mm) / denom
