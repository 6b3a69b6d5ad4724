"""Momentum-space partial-wave Lippmann-Schwinger solver.

Plane waves are normalised as <x|k> = (2 pi)^{-3/2} e^{i k.x}, under which a
central potential has the partial-wave decomposition

    <k|V|k'> = sum_l (2l+1)/(4 pi) P_l(k^.k'^) V_l(k, k'),
    V_l(p, p') = (2/pi) * integral j_l(p r) V(r) j_l(p' r) r^2 dr,

and the partial-wave t-matrix solves the one-dimensional integral equation

    t_l(p, p'; z) = V_l(p, p') + integral dq q^2 V_l(p, q) t_l(q, p'; z) / (z - q^2).

The same (2/pi) constant maps the on-shell solution onto the phase-shift
amplitude: t_l(k0, k0; k0^2 + i0) = (2/pi) * [-sin(eta_l) e^{i eta_l} / k0].
That consistency (solved off-shell equation vs. radial phase shift) is
enforced by the test-suite, which pins every convention in this module.

For eps > 0 the resolvent denominator is smooth and the equation is solved
by straight Nystrom collocation on a panelled Gauss grid; for eps = 0 the
principal value is handled by on-shell subtraction (regularised integrand
plus an analytic counter-term and the -i pi k0/2 half-residue).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import spherical_jn

from multiscat.greens import ComplexEnergy
from multiscat.potentials import Potential, QuadratureError


class PoleProximityError(RuntimeError):
    """Linear system is near-singular: z sits close to a bound-state pole."""


@dataclass(frozen=True)
class MomentumGrid:
    """Panelled Gauss-Legendre grid on [0, p_max] for the LS kernel.

    Panels split at k0 and 2*k0 so nodes cluster near the on-shell point
    (where the resolvent peaks as eps shrinks) and never coincide with it.
    """

    nodes: np.ndarray
    weights: np.ndarray
    k0: float
    p_max: float

    def __post_init__(self):
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("momentum nodes must be strictly increasing")
        if np.any(self.weights <= 0):
            raise ValueError("momentum weights must be positive")
        if np.any(np.abs(self.nodes - self.k0) < 1e-12):
            raise ValueError("k0 must not coincide with a quadrature node")

    @classmethod
    def build(cls, k0: float, p_max: float, n_inner: int = 64, n_mid: int = 48,
              n_outer: int | None = None, osc_scale: float = 1.0) -> "MomentumGrid":
        if k0 <= 0:
            raise ValueError("k0 must be positive")
        if p_max <= 2 * k0:
            raise ValueError("p_max must exceed 2*k0")
        if n_outer is None:
            # resolve oscillations e^{i q * osc_scale} on the outer panel
            n_outer = max(96, int(0.75 * (p_max - 2 * k0) * max(osc_scale, 1.0)) + 32)
        nodes, weights = [], []
        for (a, b, n) in ((0.0, k0, n_inner), (k0, 2 * k0, n_mid),
                          (2 * k0, p_max, n_outer)):
            x, w = np.polynomial.legendre.leggauss(n)
            nodes.append(0.5 * (b - a) * x + 0.5 * (a + b))
            weights.append(0.5 * (b - a) * w)
        return cls(nodes=np.concatenate(nodes), weights=np.concatenate(weights),
                   k0=float(k0), p_max=float(p_max))

    @property
    def size(self) -> int:
        return self.nodes.size


@dataclass
class OffshellTable:
    """t_l(p, p'; z) collocated on the grid nodes plus the on-shell point."""

    l: int
    z: ComplexEnergy
    momenta: np.ndarray              # grid nodes + [k0]
    values: np.ndarray = field(repr=False)
    on_shell_index: int = -1

    @property
    def on_shell(self) -> complex:
        return complex(self.values[self.on_shell_index, self.on_shell_index])

    def half_shell(self) -> np.ndarray:
        """t_l(q_i, k0; z) for all grid momenta (symmetric half-shell column)."""
        return self.values[:, self.on_shell_index]


# ---------------------------------------------------------------------------
# partial-wave potential matrix elements
# ---------------------------------------------------------------------------

@lru_cache(maxsize=128)
def _radial_rule(pot: Potential, p_top: float, scale: int):
    """Panelled Gauss nodes resolving j_l(p_top * r) over the support."""
    r_eff = pot.effective_radius() or pot.a   # V = 0: any panel integrates 0
    edges = sorted({0.0, *[b for b in pot.breakpoints() if b < r_eff], r_eff})
    # extend smooth tails in octaves so node budgets track the local scale
    full = [edges[0]]
    for a, b in zip(edges[:-1], edges[1:]):
        seg = a if a > 0 else b / 8.0
        while a > 0 and b / a > 2.5:
            a *= 2.0
            full.append(min(a, b))
        full.append(b)
    full = sorted(set(full))
    rs, ws = [], []
    for a, b in zip(full[:-1], full[1:]):
        n = scale * max(24, int(0.7 * (b - a) * p_top) + 16)
        x, w = np.polynomial.legendre.leggauss(n)
        rs.append(0.5 * (b - a) * x + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * w)
    return np.concatenate(rs), np.concatenate(ws)


def vl_matrix(pot: Potential, l: int, momenta, scale: int = 1) -> np.ndarray:
    """V_l(p_i, p_j) = (2/pi) integral j_l(p_i r) V(r) j_l(p_j r) r^2 dr."""
    momenta = np.asarray(momenta, dtype=float)
    rs, ws = _radial_rule(pot, float(momenta.max()), scale)
    J = spherical_jn(l, np.outer(rs, momenta))
    core = ws * rs * rs * pot.evaluate(rs)
    out = (2.0 / np.pi) * (J.T * core) @ J
    return 0.5 * (out + out.T)


def vl_kernel(pot: Potential, l: int, p1: float, p2: float,
              rel_tol: float = 1e-8) -> float:
    """Scalar V_l(p1, p2) with a node-doubling convergence check."""
    if p1 <= 0 or p2 <= 0:
        raise ValueError("momenta must be positive")
    ms = np.array([p1, p2]) if p1 != p2 else np.array([p1])
    v1 = vl_matrix(pot, l, ms, scale=1)[0, -1]
    v2 = vl_matrix(pot, l, ms, scale=2)[0, -1]
    if abs(v2 - v1) > max(rel_tol * abs(v2), 1e-12):
        raise QuadratureError(
            f"V_l quadrature not converged for l={l}: {v1:.3e} vs {v2:.3e}",
            residual=abs(v2 - v1))
    return float(v2)


# ---------------------------------------------------------------------------
# Nystrom / principal-value solver
# ---------------------------------------------------------------------------

def solve_offshell_t(pot: Potential, l: int, z: ComplexEnergy,
                     grid: MomentumGrid) -> OffshellTable:
    """Solve the partial-wave LS equation on the grid (plus on-shell point).

    eps > 0: straight Nystrom collocation.  eps = 0: Haftel-Tabakin
    on-shell subtraction with the analytic principal-value counter-term
    and the -i pi k0 / 2 half-residue.
    """
    if abs(grid.k0 - z.k0) > 1e-12:
        raise ValueError("grid and energy disagree about k0")
    q = grid.nodes
    w = grid.weights
    k0 = z.k0
    momenta = np.concatenate([q, [k0]])
    V = vl_matrix(pot, l, momenta)
    n = momenta.size

    coeff = np.zeros(n, dtype=complex)
    if z.eps > 0:
        coeff[:-1] = w * q * q / (z.z - q * q)
    else:
        coeff[:-1] = w * q * q / (k0 * k0 - q * q)
        log_term = np.log((grid.p_max + k0) / (grid.p_max - k0)) / (2.0 * k0)
        coeff[-1] = (k0 * k0 * (log_term - np.sum(w / (k0 * k0 - q * q)))
                     - 0.5j * np.pi * k0)

    A = np.eye(n, dtype=complex) - V * coeff[None, :]
    try:
        T = np.linalg.solve(A, V.astype(complex))
    except np.linalg.LinAlgError as exc:
        raise PoleProximityError(f"LS system singular at z={z.z}: {exc}") from exc
    resid = np.max(np.abs(A @ T - V)) / max(np.max(np.abs(V)), 1e-300)
    if resid > 1e-8:
        raise PoleProximityError(
            f"LS solve ill-conditioned at z={z.z} (residual {resid:.2e}); "
            "z may sit near a bound-state pole")
    return OffshellTable(l=l, z=z, momenta=momenta, values=T)
