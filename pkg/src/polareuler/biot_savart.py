"""Velocity recovery from vorticity, one angular mode at a time.

Normalization: curl v = omega exactly, i.e. the stream function solves
-Lap psi = omega and v = (v_r, v_alpha) with

    psi_k(r) = (1/2k) [ r^-k int_0^r s^{k+1} w_k ds + r^k int_r^rmax s^{1-k} w_k ds ]
    v_alpha_k = -d psi_k / dr,     v_r_k = (i k / r) psi_k

For k=0 the velocity is purely angular: v_alpha = (1/r) int_0^r w_0 s ds.

All r^(+-k) factors are evaluated through ratios <= 1 in log space, so the
solve stays finite for arbitrarily high modes.
"""

import math
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np

from .field import PolarField, support_annulus, synthesize, lp_norm

_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)

# largest exponent swing allowed inside one cumsum block
_BLOCK_SPAN = 500.0


class _ModeSolver:
    """Per-grid precomputation for the cumulative Green's integrals."""

    def __init__(self, grid):
        self.grid = grid
        rule = grid.subrule()
        self.stencil = rule.stencil
        self.sq = rule.points
        self.wq = rule.weights
        self.P = rule.interp
        self.L = grid.log_nodes
        self.Lq = np.log(self.sq)
        self._tables = {}

    def _mode_tables(self, k):
        tab = self._tables.get(k)
        if tab is None:
            L, Lq = self.L, self.Lq
            pw_in = np.exp(k * (Lq - L[1:, None]))     # (s/r_j)^k, interval end
            pw_out = np.exp(k * (L[:-1, None] - Lq))   # (r_{j-1}/s)^k, interval start
            tab = (pw_in, pw_out, self._blocks(k))
            self._tables[k] = tab
        return tab

    def _blocks(self, k):
        """Node-index block boundaries keeping k * log-span bounded."""
        if k == 0:
            return [(0, self.L.size - 1)]
        span = _BLOCK_SPAN / k
        blocks = []
        i0 = 0
        n = self.L.size
        while i0 < n - 1:
            i1 = int(np.searchsorted(self.L, self.L[i0] + span, side="right"))
            i1 = min(max(i1, i0 + 1), n - 1)
            blocks.append((i0, i1))
            i0 = i1
        return blocks

    def _local(self, phi, pw):
        phi_gl = np.einsum("iqs,is->iq", self.P, phi[self.stencil])
        return np.sum(self.wq * pw * phi_gl, axis=1)

    def cumulative(self, phi, k):
        """(A_i, B_i) with A = int_rmin^r (s/r)^k phi ds, B = int_r^rmax (r/s)^k phi ds."""
        pw_in, pw_out, blocks = self._mode_tables(k)
        n = self.L.size
        a_loc = self._local(phi, pw_in)     # scaled to interval right end
        b_loc = self._local(phi, pw_out)    # scaled to interval left end
        A = np.zeros(n, dtype=phi.dtype)
        B = np.zeros(n, dtype=phi.dtype)
        L = self.L
        for i0, i1 in blocks:
            up = np.exp(k * (L[i0 + 1 : i1 + 1] - L[i0]))
            A[i0 + 1 : i1 + 1] = np.exp(-k * (L[i0 + 1 : i1 + 1] - L[i0])) * (
                A[i0] + np.cumsum(a_loc[i0:i1] * up)
            )
        for i0, i1 in reversed(blocks):
            down = np.exp(-k * (L[i0:i1] - L[i0]))
            z = b_loc[i0:i1] * down
            B[i0:i1] = np.exp(k * (L[i0:i1] - L[i0])) * (
                B[i1] * np.exp(-k * (L[i1] - L[i0])) + np.cumsum(z[::-1])[::-1]
            )
        return A, B


_solver_cache = {}


def _solver_for(grid):
    key = id(grid)
    solver = _solver_cache.get(key)
    if solver is None or solver.grid is not grid:
        solver = _ModeSolver(grid)
        _solver_cache[key] = solver
    return solver


@dataclass
class VelocityModes:
    """Stream function and velocity components per angular mode."""

    grid: object
    k_max: int
    psi: np.ndarray
    vr: np.ndarray
    valpha: np.ndarray
    tail_warning: float = 0.0
    symmetry_N: object = None

    def vr_field(self):
        return PolarField(self.grid, self.vr, symmetry_N=self.symmetry_N)

    def valpha_field(self):
        return PolarField(self.grid, self.valpha, symmetry_N=self.symmetry_N)

    def at_points(self, points):
        """(v_r, v_alpha) values at (r, alpha) points."""
        return (
            synthesize(self.vr_field(), points),
            synthesize(self.valpha_field(), points),
        )

    def max_speed(self):
        n_alpha = max(8, 4 * (self.k_max + 1))
        vr = np.abs(self.vr_field().node_values(n_alpha)).max()
        va = np.abs(self.valpha_field().node_values(n_alpha)).max()
        return math.hypot(vr, va)


def solve_velocity(omega, mode_threshold=1e-15, warn_tail=True):
    """Velocity modes of a PolarField vorticity; skips empty modes."""
    grid = omega.grid
    solver = _solver_for(grid)
    n = grid.n
    km = omega.k_max
    psi = np.zeros((km + 1, n), dtype=complex)
    vr = np.zeros((km + 1, n), dtype=complex)
    va = np.zeros((km + 1, n), dtype=complex)

    scale = np.abs(omega.coeffs).max()
    tail = 0.0
    if scale > 0.0:
        edge = np.abs(omega.coeffs[:, -1]).max()
        if edge > 1e-14 * scale:
            tail = edge * grid.r_max**2
            if warn_tail:
                warnings.warn(
                    f"vorticity not decayed at r_max; estimated tail error {tail:.3g}",
                    stacklevel=2,
                )

    r = grid.nodes
    for k in range(km + 1):
        wk = omega.coeffs[k]
        if scale > 0.0 and np.abs(wk).max() <= mode_threshold * scale:
            continue
        phi = r * wk
        A, B = solver.cumulative(phi, k)
        if k == 0:
            va[0] = A / r
        else:
            psi[k] = (A + B) / (2.0 * k)
            va[k] = (A - B) / (2.0 * r)
            vr[k] = 1j * k * psi[k] / r
    return VelocityModes(
        grid, km, psi, vr, va, tail_warning=tail, symmetry_N=omega.symmetry_N
    )


# ---------------------------------------------------------------------------
# diagnostics


def vr_mode_formula(g_func, support, N, probes, n_r=400, n_beta=None):
    """Radial velocity of omega = g(r) sin(N alpha) by direct p.v. quadrature.

    Returns (values, error_estimates): values[i] is the cos(N alpha)
    coefficient of v_r at probes[i], i.e. v_r(r, alpha) = values[i] cos(N alpha).
    The principal value is handled by a symmetric midpoint grid in the
    angle difference; the error estimate is a two-resolution difference.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    a1, a2 = support
    probes = np.atleast_1d(np.asarray(probes, dtype=float))

    # radial panels over the support, 4-point Gauss each
    edges = np.linspace(a1, a2, n_r + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    rp = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    wr = (half[:, None] * _GL_W[None, :]).ravel()
    gvals = np.asarray([g_func(s) for s in rp]) if not callable(g_func) else g_func(rp)

    def _integral(m_beta):
        beta = -np.pi + (np.arange(m_beta) + 0.5) * (2.0 * np.pi / m_beta)
        dbeta = 2.0 * np.pi / m_beta
        num = np.sin(beta) * np.sin(N * beta)           # (m,)
        out = np.empty(probes.size)
        for i, r in enumerate(probes):
            D = (rp[:, None] - r) ** 2 + 2.0 * rp[:, None] * r * (1.0 - np.cos(beta)[None, :])
            out[i] = np.sum((wr * gvals * rp**2)[:, None] * num[None, :] / D) * dbeta
        return out / (2.0 * np.pi)

    if n_beta is None:
        n_beta = max(256, 64 * N)
    coarse = _integral(n_beta)
    fine = _integral(2 * n_beta)
    return fine, np.abs(fine - coarse)


@dataclass
class DecayScan:
    table: list                 # (N, max_alpha |v_r| at probe)
    slope: float = None         # d log(max|v_r|) / dN


def exp_decay_scan(g_values, grid, N_list, r_probe, k_pad=0):
    """Table of max_alpha |v_r|(r_probe) for omega = g(r) cos(N alpha)."""
    N_list = list(N_list)
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ValueError("N_list must be increasing")
    rows = []
    for N in N_list:
        omega = PolarField.from_mode(grid, N, 0.5 * np.asarray(g_values), symmetry_N=N)
        vm = solve_velocity(omega)
        vr_probe = PolarField(grid, vm.vr).coeffs_at(r_probe)[N, 0]
        rows.append((N, 2.0 * abs(vr_probe)))
    slope = None
    if len(rows) >= 2:
        Ns = np.array([r[0] for r in rows], dtype=float)
        vals = np.array([max(r[1], 1e-300) for r in rows])
        slope = float(np.polyfit(Ns, np.log(vals), 1)[0])
    return DecayScan(table=rows, slope=slope)


@dataclass
class LogLipReport:
    constant: float
    pairs: int
    R: float
    K: float


def loglip_modulus(omega, sample_pairs=2000, seed=0):
    """Empirical Log-Lipschitz constant of the velocity of omega.

    max over random point pairs in the support annulus of
    (|dv_r| + |dv_alpha|) / (||omega||_inf |x-y| (1 + log(R/|x-y|))).
    """
    linf = lp_norm(omega, np.inf)
    if linf == 0.0:
        ann = None
    else:
        ann = support_annulus(omega, 1e-8 * linf)
    if ann is None:
        return LogLipReport(constant=0.0, pairs=0, R=0.0, K=1.0)
    r_lo, r_hi = ann
    if r_hi <= r_lo:
        raise ValueError("degenerate support annulus")
    R, K = r_hi, r_hi / r_lo
    vm = solve_velocity(omega)
    rng = np.random.default_rng(seed)
    r = rng.uniform(r_lo, r_hi, size=2 * sample_pairs)
    al = rng.uniform(-np.pi, np.pi, size=2 * sample_pairs)
    pts = np.column_stack([r, al])
    vr, va = vm.at_points(pts)
    x = np.column_stack([r * np.cos(al), r * np.sin(al)])
    x1, x2 = x[:sample_pairs], x[sample_pairs:]
    dist = np.linalg.norm(x1 - x2, axis=1)
    keep = dist > 1e-12 * R
    dv = np.abs(vr[:sample_pairs] - vr[sample_pairs:]) + np.abs(
        va[:sample_pairs] - va[sample_pairs:]
    )
    modulus = dist * (1.0 + np.log(R / dist))
    ratio = dv[keep] / (linf * modulus[keep])
    return LogLipReport(
        constant=float(ratio.max()), pairs=int(keep.sum()), R=R, K=K
    )


def vr_linf_periodic(omega):
    """sup |v_r| over the support annulus for a 2pi/N-periodic field."""
    if omega.symmetry_N is None:
        raise ValueError("symmetry_N must be set")
    linf = lp_norm(omega, np.inf)
    if linf == 0.0:
        return 0.0
    ann = support_annulus(omega, 1e-8 * linf)
    if ann is None:
        return 0.0
    vm = solve_velocity(omega)
    vr_field = vm.vr_field()
    n_alpha = max(16, 8 * (omega.k_max + 1))
    vals = np.abs(vr_field.node_values(n_alpha))
    nodes = omega.grid.nodes
    mask = (nodes >= ann[0]) & (nodes <= ann[1])
    return float(vals[mask].max())


@dataclass
class PeriodicScalingScan:
    table: list                  # (N, sup |v_r|)
    raw_slope: float = None      # log sup vs log N
    corrected_slope: float = None  # log(sup / log N) vs log N


def vr_scaling_scan(g_values, grid, N_list):
    """N-sweep of sup |v_r| on the support annulus for g(r) cos(N alpha)."""
    rows = []
    for N in N_list:
        omega = PolarField.from_mode(grid, N, 0.5 * np.asarray(g_values), symmetry_N=N)
        rows.append((N, vr_linf_periodic(omega)))
    raw = corrected = None
    if len(rows) >= 2:
        Ns = np.array([r[0] for r in rows], dtype=float)
        vals = np.array([max(r[1], 1e-300) for r in rows])
        raw = float(np.polyfit(np.log(Ns), np.log(vals), 1)[0])
        corrected = float(np.polyfit(np.log(Ns), np.log(vals / np.log(Ns)), 1)[0])
    return PeriodicScalingScan(table=rows, raw_slope=raw, corrected_slope=corrected)
