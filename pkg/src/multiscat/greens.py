"""Free-resolvent kernels, two-center sandwich kernels, structure constants.

The free resolvent at z = k0^2 + i*eps has the coordinate kernel

    <x|R0(z)|y> = -exp(i sqrt(z) |x-y|) / (4 pi |x-y|),

with sqrt(z) taken so Im sqrt(z) >= 0 (upper boundary value on the cut).
Sandwiched between the factorisations of two potentials it becomes the
two-center kernel

    <x|K(z)|y> = phi_j(x) exp(i sqrt(z) |x-y|) / (4 pi i |x-y|) phi_h(y),

whose Schatten-4 norm [tr (K*K)^2]^{1/4} is the compactness diagnostic for
overlapping potentials.  For disjoint supports the resolvent kernel
re-expands in displaced spherical waves,

    -e^{i k |x-y|}/(4 pi |x-y|) = sum_{lm,l'm'} j_l(k|x|) Y_lm(x^)
        g_{lm;l'm'}(k, R) j_l'(k|y-R|) conj(Y_l'm'((y-R)^)),

valid for |x| + |y-R| < |R|; the re-expansion coefficients g (structure
constants) are assembled here by a Gaunt contraction over outgoing waves
h+_L(k|R|) Y_LM(R^), and that pointwise identity - not any printed formula -
is what the test-suite validates them against.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from multiscat.potentials import Potential, Scatterer
from multiscat.specfun import (
    AngularGrid,
    bessel_j,
    gauss_legendre,
    hankel_plus,
    plm_norm_table,
    sph_index,
    tri_index,
    ylm_table,
)


class ConvergenceRegionError(ValueError):
    """Evaluation point outside the re-expansion's region of validity."""


class RefinementError(RuntimeError):
    def __init__(self, msg, coarse=None, fine=None):
        super().__init__(msg)
        self.coarse = coarse
        self.fine = fine


@dataclass(frozen=True)
class ComplexEnergy:
    """z = k0^2 + i*eps with k0 > 0, eps >= 0."""

    k0: float
    eps: float = 0.0

    def __post_init__(self):
        if self.k0 <= 0:
            raise ValueError("k0 must be positive")
        if self.eps < 0:
            raise ValueError("eps must be nonnegative")

    @property
    def z(self) -> complex:
        return complex(self.k0 * self.k0, self.eps)

    @property
    def sqrt_z(self) -> complex:
        # principal sqrt keeps Im >= 0 on the upper rim of the cut
        return complex(np.sqrt(complex(self.k0 * self.k0, self.eps)))

    @property
    def energy(self) -> float:
        return self.k0 * self.k0


def r0_kernel(z: ComplexEnergy, x, y):
    """Free-resolvent kernel <x|R0(z)|y> = -e^{i sqrt(z) r}/(4 pi r)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.linalg.norm(x - y, axis=-1)
    if np.any(r == 0):
        raise ValueError("r0_kernel is singular at x = y")
    out = -np.exp(1j * z.sqrt_z * r) / (4.0 * np.pi * r)
    return complex(out) if np.ndim(out) == 0 else out


def ktilde_kernel(j: Scatterer, h: Scatterer, z: ComplexEnergy, x, y):
    """Two-center kernel phi_j(x) e^{i sqrt(z) r}/(4 pi i r) phi_h(y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    rj = np.linalg.norm(x - j.center_array, axis=-1)
    rh = np.linalg.norm(y - h.center_array, axis=-1)
    r = np.linalg.norm(x - y, axis=-1)
    if np.any(r == 0):
        raise ValueError("ktilde_kernel is singular at x = y")
    out = (j.potential.phi(rj) * h.potential.phi(rh)
           * np.exp(1j * z.sqrt_z * r) / (4.0j * np.pi * r))
    return complex(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# structure constants
# ---------------------------------------------------------------------------

@dataclass
class StructureConstantMatrix:
    """g_{lm;l'm'}(k0, R) for l, l' <= lmax.

    ``matrix`` is indexed by ``sph_index(l, m)`` on the first center (at the
    origin) and ``sph_index(l', m')`` on the second (at R).
    """

    k0: float
    R: tuple[float, float, float]
    lmax: int
    matrix: np.ndarray = field(repr=False)

    @property
    def R_array(self) -> np.ndarray:
        return np.asarray(self.R, dtype=float)

    def entry(self, l: int, m: int, lp: int, mp: int) -> complex:
        return complex(self.matrix[sph_index(l, m), sph_index(lp, mp)])

    def expansion_value(self, x, y) -> complex:
        """Evaluate the displaced-wave expansion at coordinates (x, y).

        x is measured from the origin-center, y from the origin as well
        (the second center sits at R).  Raises ConvergenceRegionError
        outside |x| + |y - R| < |R|.
        """
        x = np.asarray(x, dtype=float)
        v = np.asarray(y, dtype=float) - self.R_array
        rx = float(np.linalg.norm(x))
        rv = float(np.linalg.norm(v))
        Rlen = float(np.linalg.norm(self.R_array))
        if rx + rv >= Rlen:
            raise ConvergenceRegionError(
                f"|x| + |y-R| = {rx + rv:.4g} >= |R| = {Rlen:.4g}: "
                "outside the expansion's convergence region")
        xa = ylm_table(self.lmax, x if rx > 0 else np.array([0.0, 0.0, 1.0]))
        ya = ylm_table(self.lmax, v if rv > 0 else np.array([0.0, 0.0, 1.0]))
        jx = np.concatenate([[bessel_j(l, self.k0 * rx)] * (2 * l + 1)
                             for l in range(self.lmax + 1)])
        jy = np.concatenate([[bessel_j(l, self.k0 * rv)] * (2 * l + 1)
                             for l in range(self.lmax + 1)])
        left = jx * xa
        right = jy * np.conj(ya)
        return complex(left @ self.matrix @ right)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["l", "m", "lp", "mp", "re_g", "im_g"])
            for l in range(self.lmax + 1):
                for m in range(-l, l + 1):
                    for lp in range(self.lmax + 1):
                        for mp in range(-lp, lp + 1):
                            v = self.matrix[sph_index(l, m), sph_index(lp, mp)]
                            wr.writerow([l, m, lp, mp,
                                         f"{v.real:.16e}", f"{v.imag:.16e}"])

    @classmethod
    def from_csv(cls, path, k0: float, R, lmax: int) -> "StructureConstantMatrix":
        n = (lmax + 1) ** 2
        mat = np.zeros((n, n), dtype=complex)
        with open(path, newline="") as fh:
            rd = csv.reader(fh)
            next(rd)
            for l, m, lp, mp, re, im in rd:
                mat[sph_index(int(l), int(m)), sph_index(int(lp), int(mp))] = (
                    float(re) + 1j * float(im))
        return cls(k0=k0, R=tuple(float(v) for v in R), lmax=lmax, matrix=mat)


def _neg_sign(m):
    """Parity factor relating Y_{l,-|m|} to the positive-m Legendre row."""
    m = np.asarray(m)
    return np.where(m < 0, (-1.0) ** np.abs(m), 1.0)


@lru_cache(maxsize=32)
def _structure_constants_cached(k0: float, R: tuple, lmax: int) -> StructureConstantMatrix:
    Rv = np.asarray(R, dtype=float)
    Rlen = float(np.linalg.norm(Rv))
    Lmax = 2 * lmax
    hL = np.array([hankel_plus(L, k0 * Rlen) for L in range(Lmax + 1)])
    YR = np.conj(ylm_table(Lmax, Rv))          # conj(Y_LM(R^))

    n_nodes = 2 * Lmax // 2 + Lmax + 8         # exact for degree <= 3*Lmax
    xg, wg = gauss_legendre(n_nodes)
    plm = plm_norm_table(Lmax, xg)

    nsph = (lmax + 1) ** 2
    g = np.zeros((nsph, nsph), dtype=complex)

    for l in range(lmax + 1):
        for lp in range(lmax + 1):
            ms = np.arange(-l, l + 1)
            L0 = abs(l - lp)
            for M in range(-(l + lp), l + lp + 1):
                mps = ms - M
                ok = np.abs(mps) <= lp
                if not np.any(ok):
                    continue
                mv, mpv = ms[ok], mps[ok]
                Ls = np.arange(max(L0, abs(M)), l + lp + 1)
                Ls = Ls[(l + lp + Ls) % 2 == 0]
                if Ls.size == 0:
                    continue
                # I[m_idx, L_idx]: exact GL integral of the Legendre triple product
                T = plm[[tri_index(l, abs(m)) for m in mv]] * \
                    plm[[tri_index(lp, abs(mp)) for mp in mpv]]
                K = plm[[tri_index(L, abs(M)) for L in Ls]]
                I = T @ (wg[:, None] * K.T)
                sigma = (_neg_sign(-mpv) * _neg_sign(mv))[:, None] * _neg_sign(M)
                gaunt_vals = 2.0 * np.pi * sigma * I
                # (-1)^L: the inner argument enters the one-center expansion
                # through its antipode
                phase = (1j) ** (l + lp - Ls) * (-1.0) ** Ls
                contrib = gaunt_vals * (phase * hL[Ls] * YR[[sph_index(L, M) for L in Ls]])
                # (-1)^l: the origin-side argument enters the translation
                # formula through its antipode as well
                vals = ((-4.0j * np.pi * k0) * (-1.0) ** l
                        * ((-1.0) ** mpv) * contrib.sum(axis=1))
                rows = [sph_index(l, m) for m in mv]
                cols = [sph_index(lp, mp) for mp in mpv]
                g[rows, cols] = vals
    return StructureConstantMatrix(k0=k0, R=tuple(R), lmax=lmax, matrix=g)


def structure_constants(k0: float, R, lmax: int) -> StructureConstantMatrix:
    """Displaced-wave re-expansion coefficients g_{lm;l'm'}(k0, R).

    Assembled by the Gaunt contraction over outgoing waves h+_L(k0 |R|)
    Y_LM(R^); the defining pointwise identity (module docstring) is the
    source of truth for sign and normalisation.
    """
    if k0 <= 0:
        raise ValueError("k0 must be positive")
    Rv = np.asarray(R, dtype=float)
    if np.linalg.norm(Rv) == 0:
        raise ValueError("structure constants need |R| > 0")
    if lmax < 0 or 2 * lmax > 140:
        raise ValueError("lmax out of the supported range")
    return _structure_constants_cached(float(k0), tuple(float(v) for v in Rv), int(lmax))


# ---------------------------------------------------------------------------
# discretised two-center kernel and Schatten-4 norms
# ---------------------------------------------------------------------------

@dataclass
class KtildeDiscretization:
    """Quadrature discretisation of the two-center kernel on a node-pair grid.

    ``matrix`` holds sqrt(w_x) K(x, y) sqrt(w_y); its singular values
    approximate those of the integral operator.  For overlapping supports
    the integrable 1/|x-y| diagonal is tamed by capping distances at the
    local quadrature-cell radius (cell averaging).
    """

    scatterer_j: Scatterer
    scatterer_h: Scatterer
    z: ComplexEnergy
    points_j: np.ndarray
    weights_j: np.ndarray
    points_h: np.ndarray
    weights_h: np.ndarray
    matrix: np.ndarray = field(repr=False)
    n_radial: int = 0
    angular_order: int = 0
    kernel_fn: object = None

    @classmethod
    def build(cls, sj: Scatterer, sh: Scatterer, z: ComplexEnergy,
              n_radial: int = 14, angular_order: int = 10,
              kernel_fn=None) -> "KtildeDiscretization":
        pj, wj = _ball_grid(sj, n_radial, angular_order)
        ph, wh = _ball_grid(sh, n_radial, angular_order)
        if kernel_fn is None:
            K = _ktilde_matrix(sj, sh, z, pj, wj, ph, wh)
        else:
            K = kernel_fn(pj, ph)
        M = np.sqrt(wj)[:, None] * K * np.sqrt(wh)[None, :]
        return cls(scatterer_j=sj, scatterer_h=sh, z=z,
                   points_j=pj, weights_j=wj, points_h=ph, weights_h=wh,
                   matrix=M, n_radial=n_radial, angular_order=angular_order,
                   kernel_fn=kernel_fn)

    def refined(self, factor: float = 1.5) -> "KtildeDiscretization":
        return KtildeDiscretization.build(
            self.scatterer_j, self.scatterer_h, self.z,
            n_radial=int(math.ceil(self.n_radial * factor)),
            angular_order=int(math.ceil(self.angular_order * factor)),
            kernel_fn=self.kernel_fn)


def _ball_grid(s: Scatterer, n_radial: int, angular_order: int):
    """Radial Gauss x angular product grid over the effective support ball."""
    pot = s.potential
    r_eff = pot.effective_radius()
    edges = [0.0] + [b for b in pot.breakpoints() if b < r_eff] + [r_eff]
    rs, wr = [], []
    xg, wg = gauss_legendre(max(4, n_radial))
    for a, b in zip(edges[:-1], edges[1:]):
        rs.append(0.5 * (b - a) * xg + 0.5 * (a + b))
        wr.append(0.5 * (b - a) * wg)
    rs = np.concatenate(rs)
    wr = np.concatenate(wr)
    ang = AngularGrid.for_degree(angular_order)
    pts = (s.center_array[None, None, :]
           + rs[:, None, None] * ang.nodes[None, :, :]).reshape(-1, 3)
    wts = (wr[:, None] * rs[:, None] ** 2 * ang.weights[None, :]).ravel()
    return pts, wts


def _ktilde_matrix(sj, sh, z, pj, wj, ph, wh, chunk=2048):
    phi_j = sj.potential.phi(np.linalg.norm(pj - sj.center_array, axis=1))
    phi_h = sh.potential.phi(np.linalg.norm(ph - sh.center_array, axis=1))
    # cell radius used to regularise near-coincident nodes (overlap case)
    rho_j = (3.0 * wj / (4.0 * np.pi)) ** (1.0 / 3.0)
    rho_h = (3.0 * wh / (4.0 * np.pi)) ** (1.0 / 3.0)
    sq = z.sqrt_z
    out = np.empty((pj.shape[0], ph.shape[0]), dtype=complex)
    for i0 in range(0, pj.shape[0], chunk):
        i1 = min(i0 + chunk, pj.shape[0])
        d = np.linalg.norm(pj[i0:i1, None, :] - ph[None, :, :], axis=2)
        reg = np.maximum(rho_j[i0:i1, None], rho_h[None, :])
        d = np.maximum(d, (2.0 / 3.0) * reg)
        out[i0:i1] = (phi_j[i0:i1, None] * phi_h[None, :]
                      * np.exp(1j * sq * d) / (4.0j * np.pi * d))
    return out


def _schatten4_of_matrix(M: np.ndarray, chunk: int = 1024) -> float:
    """(sum sigma^4)^{1/4} = ||M^H M||_F^{1/2}, computed in column blocks."""
    total = 0.0
    MH = M.conj().T
    for j0 in range(0, M.shape[1], chunk):
        B = MH @ M[:, j0:j0 + chunk]
        total += float(np.sum(np.abs(B) ** 2))
    return total ** 0.25


def schatten4_norm(K: KtildeDiscretization, refine: bool = True,
                   max_delta: float | None = None):
    """Schatten-4 norm estimate of the discretised kernel.

    Returns ``(value, refinement_delta)``; the delta compares against a
    grid refined by 1.5x in both radial and angular resolution.  When
    ``max_delta`` is given and exceeded, raises RefinementError carrying
    both estimates.
    """
    v1 = _schatten4_of_matrix(K.matrix)
    if not refine:
        return v1, float("nan")
    v2 = _schatten4_of_matrix(K.refined().matrix)
    delta = abs(v2 - v1) / max(abs(v2), 1e-300)
    if max_delta is not None and delta > max_delta:
        raise RefinementError(
            f"Schatten-4 estimate not refinement-stable: {v1:.6g} -> {v2:.6g}",
            coarse=v1, fine=v2)
    return v2, delta


def _nu_weights(pot: Potential, k: float, lmax: int, n_radial: int) -> np.ndarray:
    """nu_l = integral of |V(r)| j_l(k r)^2 r^2 dr over the support."""
    r_eff = pot.effective_radius()
    edges = [0.0] + [b for b in pot.breakpoints() if b < r_eff] + [r_eff]
    xg, wg = gauss_legendre(n_radial)
    rs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        rs.append(0.5 * (b - a) * xg + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * wg)
    rs = np.concatenate(rs)
    ws = np.concatenate(ws) * rs ** 2 * np.abs(pot.evaluate(rs))
    nu = np.empty(lmax + 1)
    for l in range(lmax + 1):
        jl = bessel_j(l, k * rs)
        nu[l] = float(np.dot(ws, jl * jl))
    return nu


def schatten4_norm_spectral(pot_j: Potential, pot_h: Potential, k: float,
                            R_len: float, lmax: int | None = None,
                            n_radial: int = 160):
    """Schatten-4 norm for non-overlapping spherical scatterers, any k.

    Uses the displaced spherical-wave factorisation: in a frame with R
    along z the kernel block-diagonalises in the azimuthal index m, and
    its singular values are those of diag(sqrt(nu_l)) g_m diag(sqrt(nu_l'))
    per block, where nu_l are |V|-weighted Bessel moments.  Exact up to the
    l-truncation, which the returned delta monitors.
    """
    if pot_j.effective_radius() + pot_h.effective_radius() >= R_len:
        raise ValueError("spectral Schatten norm requires non-overlapping supports")
    ka = k * max(pot_j.effective_radius(), pot_h.effective_radius())
    if lmax is None:
        # past l ~ ka the coupled entries decay geometrically with ratio
        # (r_eff_j + r_eff_h)/R; pad enough l's for ~1e-8 truncation
        ratio = (pot_j.effective_radius() + pot_h.effective_radius()) / R_len
        pad = int(min(60.0, max(12.0, -18.0 / np.log(min(ratio, 0.95)))))
        lmax = int(ka + 4.0 * (ka + 1.0) ** (1.0 / 3.0)) + pad
    lmax = min(lmax, 100)
    blocks = _g_mdiagonal_blocks(k, R_len, lmax + 8)

    def total(lm, n_rad):
        nu_j = _nu_weights(pot_j, k, lm, n_rad)
        nu_h = _nu_weights(pot_h, k, lm, n_rad)
        s4 = 0.0
        for m in range(lm + 1):
            nl = lm - m + 1
            C = (np.sqrt(nu_j[m:, None]) * blocks[m][:nl, :nl]
                 * np.sqrt(nu_h[None, m:]))
            sv = np.linalg.svd(C, compute_uv=False)
            s4 += (1.0 if m == 0 else 2.0) * float(np.sum(sv ** 4))
        return s4 ** 0.25

    v1 = total(lmax, n_radial)
    v2 = total(lmax + 8, int(n_radial * 3 // 2))
    return v2, abs(v2 - v1) / max(abs(v2), 1e-300)


@lru_cache(maxsize=16)
def _g_mdiagonal_blocks(k: float, R_len: float, lmax: int):
    """m-diagonal structure-constant blocks in the frame with R along z.

    Returns a list over m = 0..lmax of arrays g[l - m, l' - m]; the +/-m
    blocks coincide.
    """
    Lmax = 2 * lmax
    hL = np.array([hankel_plus(L, k * R_len) for L in range(Lmax + 1)])
    YL0 = np.sqrt((2 * np.arange(Lmax + 1) + 1) / (4.0 * np.pi))
    n_nodes = Lmax + Lmax // 2 + 8
    xg, wg = gauss_legendre(n_nodes)
    plm = plm_norm_table(Lmax, xg)
    blocks = []
    for m in range(lmax + 1):
        ls = np.arange(m, lmax + 1)
        nl = ls.size
        block = np.zeros((nl, nl), dtype=complex)
        P_lm = plm[[tri_index(l, m) for l in ls]]
        for i, l in enumerate(ls):
            T = P_lm[i] * P_lm                      # (nl, nodes)
            for jdx, lp in enumerate(ls):
                Ls = np.arange(abs(l - lp), l + lp + 1)
                Ls = Ls[(l + lp + Ls) % 2 == 0]
                K = plm[[tri_index(L, 0) for L in Ls]]
                I = K @ (wg * T[jdx])
                phase = (1j) ** (l + lp - Ls) * (-1.0) ** Ls
                block[i, jdx] = ((-4.0j * np.pi * k) * (-1.0) ** l * np.sum(
                    2.0 * np.pi * I * phase * hL[Ls] * YL0[Ls]))
        blocks.append(block)
    return blocks


def schatten4_decay_diagnostic(pot_j: Potential, pot_h: Potential, R_len: float,
                               k_values, r_exponent: float = 4.5) -> dict:
    """Truncated integral of ||K(k^2+i0)||_4^r over dk^2 (report-only).

    The tail beyond the sampled k-range is not computable at desk scale, so
    this is a diagnostic, never a pass/fail quantity.
    """
    ks = np.asarray(sorted(k_values), dtype=float)
    norms = np.array([schatten4_norm_spectral(pot_j, pot_h, k, R_len)[0] for k in ks])
    integrand = norms ** r_exponent
    return {
        "k_values": ks.tolist(),
        "norms": norms.tolist(),
        "r_exponent": r_exponent,
        "truncated_integral_dk2": float(np.trapezoid(integrand, ks ** 2)),
    }
