"""Central potential models V(r) and their admissibility diagnostics.

Units: hbar^2/2m = 1, so V carries dimension 1/length^2 and the radial
equation reads u'' = [l(l+1)/r^2 + V(r) - k^2] u.

Four built-in shapes:

* ``square_well``:       V(r) = v0 for r <= a, else 0
* ``gaussian``:          V(r) = v0 exp(-r^2/a^2)
* ``exponential``:       V(r) = v0 exp(-r/a)
* ``truncated_coulomb``: V(r) = v0 min(1/r, 1/rc) exp(-r/a)

The factorisation phi with phi^2 = V uses the +i branch where V < 0
(phi = i sqrt(|V|)); phi only ever enters quadratically, so the branch
choice drops out of every observable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

KINDS = ("square_well", "gaussian", "exponential", "truncated_coulomb")

#: |V| below this threshold counts as "outside the effective support".
SUPPORT_CUTOFF = 1e-12


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested accuracy."""

    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


@dataclass(frozen=True)
class Potential:
    kind: str
    v0: float
    a: float
    rc: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}; choose from {KINDS}")
        if self.a <= 0:
            raise ValueError("range parameter a must be positive")
        if self.kind == "truncated_coulomb":
            if self.rc is None or self.rc <= 0:
                raise ValueError("truncated_coulomb requires a positive core radius rc")

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, r):
        """V(r) for r >= 0 (scalar or array); exact 0 outside compact support."""
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise ValueError("radius must be nonnegative")
        if self.kind == "square_well":
            out = np.where(r <= self.a, self.v0, 0.0)
        elif self.kind == "gaussian":
            out = self.v0 * np.exp(-((r / self.a) ** 2))
        elif self.kind == "exponential":
            out = self.v0 * np.exp(-r / self.a)
        else:  # truncated_coulomb; the 1/r core is capped at 1/rc
            with np.errstate(divide="ignore"):
                inv = np.where(r > self.rc, np.divide(1.0, np.where(r > 0, r, 1.0)),
                               1.0 / self.rc)
            out = self.v0 * inv * np.exp(-r / self.a)
        return out if out.ndim else float(out)

    def phi(self, r):
        """Factor phi(r) with phi^2 = V exactly; i*sqrt(|V|) where V < 0."""
        v = np.asarray(self.evaluate(r), dtype=float)
        out = np.where(v >= 0, np.sqrt(np.clip(v, 0, None)) + 0j,
                       1j * np.sqrt(np.clip(-v, 0, None)))
        return out if out.ndim else complex(out)

    def effective_radius(self, cutoff: float = SUPPORT_CUTOFF) -> float:
        """Radius beyond which |V| < cutoff (exact support for the well)."""
        if self.v0 == 0:
            return 0.0
        av0 = abs(self.v0)
        if self.kind == "square_well":
            return self.a
        if self.kind == "gaussian":
            return self.a * np.sqrt(max(np.log(av0 / cutoff), 0.0))
        if self.kind == "exponential":
            return self.a * max(np.log(av0 / cutoff), 0.0)
        # capped coulomb tail: solve v0 e^{-r/a}/r = cutoff by fixed point
        r = self.a * max(np.log(av0 / cutoff), 1.0)
        for _ in range(60):
            r_new = self.a * np.log(av0 / (cutoff * max(r, self.rc)))
            if abs(r_new - r) < 1e-12 * max(r, 1.0):
                break
            r = max(r_new, self.rc)
        return max(r, self.rc)

    def breakpoints(self) -> list[float]:
        """Radii where V or its derivative jumps (radial integrators split here)."""
        if self.kind == "square_well":
            return [self.a]
        if self.kind == "truncated_coulomb":
            return [self.rc]
        return []


# -- constructors ------------------------------------------------------------

def square_well(v0: float, a: float) -> Potential:
    return Potential("square_well", v0, a)


def gaussian(v0: float, a: float) -> Potential:
    return Potential("gaussian", v0, a)


def exponential(v0: float, a: float) -> Potential:
    return Potential("exponential", v0, a)


def truncated_coulomb(v0: float, a: float, rc: float) -> Potential:
    return Potential("truncated_coulomb", v0, a, rc)


@dataclass(frozen=True)
class Scatterer:
    """A potential planted at a point in space."""

    center: tuple[float, float, float]
    potential: Potential

    def __post_init__(self):
        c = tuple(float(x) for x in self.center)
        object.__setattr__(self, "center", c)

    @property
    def center_array(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float)


@dataclass(frozen=True)
class RollnikDiagnostics:
    l1_norm: float          # integral of |V| over R^3
    l2_norm: float          # sqrt of the integral of |V|^2
    admissible: bool
    l1_residual: float
    l2_residual: float


def rollnik_check(p: Potential, rel_tol: float = 1e-9) -> RollnikDiagnostics:
    """Integrability diagnostics: absolute and square integrability of V.

    Both norms are computed by adaptive radial quadrature truncated at the
    effective support radius.  A potential is admissible when both are
    finite; the capped-Coulomb core keeps |V|^2 ~ r^{-2}, which is locally
    integrable in 3D, so all four built-in kinds qualify.
    """
    r_max = max(p.effective_radius(), p.a)
    pts = sorted(set(p.breakpoints()) | {r_max / 2})

    def integrate(f):
        val, err = quad(f, 0.0, r_max, points=[x for x in pts if x < r_max],
                        limit=400, epsabs=1e-13, epsrel=1e-11)
        if abs(err) > max(rel_tol * abs(val), 1e-10):
            raise QuadratureError(
                f"Rollnik quadrature did not converge (residual {err:.2e})",
                residual=err)
        return val, err

    l1, e1 = integrate(lambda r: 4.0 * np.pi * r * r * abs(p.evaluate(r)))
    l2sq, e2 = integrate(lambda r: 4.0 * np.pi * r * r * p.evaluate(r) ** 2)
    l1 = float(l1)
    l2 = float(np.sqrt(max(l2sq, 0.0)))
    return RollnikDiagnostics(
        l1_norm=l1, l2_norm=l2,
        admissible=bool(np.isfinite(l1) and np.isfinite(l2)),
        l1_residual=float(e1), l2_residual=float(e2))


def pair_gap(s1: Scatterer, s2: Scatterer, cutoff: float = SUPPORT_CUTOFF) -> float:
    """Minimal distance between the two effective supports (negative = overlap)."""
    d = float(np.linalg.norm(s1.center_array - s2.center_array))
    return d - s1.potential.effective_radius(cutoff) - s2.potential.effective_radius(cutoff)
