"""Rectilinear background state and the magnetosonic stability regime."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import DomainError

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class MediumParams:
    """Background state of the sheet.

    The upper fluid moves with ``v_plus`` along x1, the lower one with
    ``-v_plus``; both carry the transverse field magnitude ``|b2|``.
    Construct through :func:`derive_params` so the derived speeds stay
    consistent.
    """

    v_plus: float
    c: float
    rho: float
    b2: float
    c_alfven: float
    C_B: float
    M_B: float

    @property
    def v_minus(self) -> float:
        return -self.v_plus

    @property
    def b2_minus(self) -> float:
        return self.b2

    def side_velocity(self, side: int) -> float:
        """Background tangential velocity on side ``+1`` or ``-1``."""
        if side not in (1, -1):
            raise DomainError(f"side must be +1 or -1, got {side!r}")
        return self.v_plus if side == 1 else -self.v_plus

    def to_dict(self) -> dict:
        return {"v_plus": self.v_plus, "c": self.c, "rho": self.rho, "b2": self.b2}


def derive_params(v_plus: float, c: float, rho: float, b2: float = 0.0) -> MediumParams:
    v_plus, c, rho, b2 = float(v_plus), float(c), float(rho), float(b2)
    for name, val in (("v_plus", v_plus), ("c", c), ("rho", rho)):
        if not val > 0.0 or not math.isfinite(val):
            raise DomainError(f"{name} must be positive and finite, got {val}")
    if not math.isfinite(b2):
        raise DomainError(f"b2 must be finite, got {b2}")
    ca2 = b2 * b2 / rho
    C_B = math.sqrt(c * c + ca2)
    return MediumParams(v_plus, c, rho, b2, math.sqrt(ca2), C_B, v_plus / C_B)


def params_from_dict(d: dict) -> MediumParams:
    """Build from the JSON config block ``{"v_plus", "c", "rho", "b2"}``."""
    try:
        return derive_params(d["v_plus"], d["c"], d["rho"], d.get("b2", 0.0))
    except KeyError as exc:
        raise DomainError(f"missing medium parameter {exc.args[0]!r}") from None


class Regime(str, Enum):
    UNSTABLE = "Unstable"
    CRITICAL = "Critical"
    STABLE = "Stable"


@dataclass(frozen=True)
class RegimeVerdict:
    tag: Regime
    margin: float
    M_B: float

    def __str__(self) -> str:
        return f"{self.tag.value} (M_B={self.M_B:.3f})"


def classify_regime(params: MediumParams, tol_critical: float = 1e-12) -> RegimeVerdict:
    """Compare M_B with sqrt(2); ``tol_critical`` is relative to sqrt(2)."""
    margin = params.M_B - SQRT2
    band = tol_critical * SQRT2
    if margin > band:
        tag = Regime.STABLE
    elif margin < -band:
        tag = Regime.UNSTABLE
    else:
        tag = Regime.CRITICAL
    return RegimeVerdict(tag, margin, params.M_B)
