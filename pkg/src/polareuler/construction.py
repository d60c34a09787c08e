"""Builders for the initial-data family and the glued multi-piece data.

The single-piece initial vorticity is

    omega0(r, alpha) = boost * lam^{1-beta} f(lam r)
                       + lam^{1-beta} N^{-beta} g(lam r) cos(N alpha)

with g a bump on (1/2, 4), f a zero-mean pair of far-separated bumps whose
induced angular velocity rotates the annulus (1/2, 4) differentially, and
N tied to lam through lam^{2-2beta+delta} = N^beta.

`boost` scales the radial part only.  The compliant amplitude (both
profiles with H^1 norm <= 1/20) produces differential rotation too weak to
wind the oscillatory part measurably within t <= 1; by the exact
amplitude-time rescaling symmetry of the vorticity equation, boosting the
amplitude by B is equivalent to following the compliant solution to time
B t, so dynamics runs use a boost while norm-budget checks use boost 1.
"""

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .grid import RadialGrid
from .field import PolarField
from .biot_savart import solve_velocity


class ConstructionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# radial profiles


class BumpProfile:
    """amp * exp(-1/(1-u^2)) with u mapping (a,b) to (-1,1); C^infty, compact."""

    def __init__(self, a, b, amp=1.0):
        if not (0.0 <= a < b):
            raise ConstructionError("need 0 <= a < b")
        self.a, self.b, self.amp = float(a), float(b), float(amp)

    @property
    def support(self):
        return (self.a, self.b)

    def _u(self, r):
        return (2.0 * r - (self.a + self.b)) / (self.b - self.a)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        u = self._u(r)
        out = np.zeros_like(u)
        inside = np.abs(u) < 1.0
        out[inside] = self.amp * np.exp(-1.0 / (1.0 - u[inside] ** 2))
        return out

    def deriv(self, r):
        r = np.asarray(r, dtype=float)
        u = self._u(r)
        out = np.zeros_like(u)
        inside = np.abs(u) < 1.0
        ui = u[inside]
        out[inside] = (
            self.amp
            * np.exp(-1.0 / (1.0 - ui**2))
            * (-2.0 * ui / (1.0 - ui**2) ** 2)
            * (2.0 / (self.b - self.a))
        )
        return out

    def scaled(self, amp):
        return BumpProfile(self.a, self.b, amp)


class CompositeProfile:
    """c * (-lam0^2 base(lam0 r) + lam0^-2 base(r / lam0)).

    The two pieces carry equal and opposite integrals against r dr, so the
    profile has exactly zero radial mean.
    """

    def __init__(self, base, lambda0, c_amp):
        self.base = base
        self.lambda0 = float(lambda0)
        self.c_amp = float(c_amp)

    @property
    def supports(self):
        a, b = self.base.support
        l0 = self.lambda0
        return [(a / l0, b / l0), (a * l0, b * l0)]

    @property
    def support(self):
        s = self.supports
        return (s[0][0], s[-1][1])

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        l0 = self.lambda0
        return self.c_amp * (
            -(l0**2) * self.base(l0 * r) + self.base(r / l0) / l0**2
        )

    def deriv(self, r):
        r = np.asarray(r, dtype=float)
        l0 = self.lambda0
        return self.c_amp * (
            -(l0**3) * self.base.deriv(l0 * r) + self.base.deriv(r / l0) / l0**3
        )

    def scaled(self, factor):
        return CompositeProfile(self.base, self.lambda0, self.c_amp * factor)


def _profile_supports(profile):
    return getattr(profile, "supports", None) or [profile.support]


def _panel_quad(profile, func, n=400):
    """int func(r) dr over the profile supports, Gauss-Legendre panels."""
    gx, gw = np.polynomial.legendre.leggauss(6)
    total = 0.0
    for a, b in _profile_supports(profile):
        edges = np.linspace(a, b, n + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * np.diff(edges)
        pts = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
        wts = (half[:, None] * gw[None, :]).ravel()
        total += float(np.sum(wts * func(pts)))
    return total


def radial_mean(profile):
    """int_0^inf profile(r) r dr."""
    return _panel_quad(profile, lambda r: profile(r) * r)


def h1_norm(profile):
    """H^1(R^2) norm of the radial function: sqrt(2 pi int (p^2 + p'^2) r dr)."""
    v = _panel_quad(profile, lambda r: (profile(r) ** 2 + profile.deriv(r) ** 2) * r)
    return math.sqrt(2.0 * math.pi * max(v, 0.0))


# ---------------------------------------------------------------------------
# profile builders

H1_BUDGET = 1.0 / 20.0


def build_g(support=(0.5, 4.0), amplitude=None, fill=0.9):
    """Bump on `support` meeting the H^1 budget; returns (profile, report)."""
    unit = BumpProfile(*support, amp=1.0)
    h1_unit = h1_norm(unit)
    if amplitude is None:
        amplitude = fill * H1_BUDGET / h1_unit
    prof = unit.scaled(amplitude)
    h1 = h1_norm(prof)
    report = {
        "support": list(support),
        "amplitude": amplitude,
        "h1": h1,
        "h1_budget": H1_BUDGET,
        "h1_ok": h1 <= H1_BUDGET * (1.0 + 1e-12),
    }
    report["valid"] = report["h1_ok"]
    return prof, report


def build_f(
    lambda0=64.0,
    c_amp=None,
    base_support=(0.5, 2.0),
    window=(0.5, 4.0),
    fill=0.9,
    strict_support=(1e-4, 1.0 / 16.0, 16.0, 1e3),
):
    """Zero-mean composite profile; returns (profile, report).

    The report verifies: zero radial mean, the H^1 budget, and that the
    induced differential rotation d/dr (v_alpha[f]/r) is sign-definite on
    `window` with its min/max ratio recorded as the quality constant M.
    """
    base = BumpProfile(*base_support, amp=1.0)
    unit = CompositeProfile(base, lambda0, 1.0)
    h1_unit = h1_norm(unit)
    if c_amp is None:
        c_amp = fill * H1_BUDGET / h1_unit
    prof = CompositeProfile(base, lambda0, c_amp)

    supports = prof.supports
    gap_ok = supports[0][1] < window[0] and supports[1][0] > window[1]

    mean = radial_mean(prof)
    mean_scale = _panel_quad(prof, lambda r: np.abs(prof(r)) * r)
    h1 = h1_norm(prof)

    # differential rotation on the window, via the k=0 velocity solve
    a_in, b_out = supports[0][0], supports[1][1]
    grid = RadialGrid.log_uniform(a_in / 2.0, b_out * 1.2, 4000)
    vm = solve_velocity(PolarField.from_radial(grid, prof(grid.nodes)), warn_tail=False)
    omega_rot = vm.valpha[0].real / grid.nodes        # angular rate v_alpha / r
    dvr = np.gradient(omega_rot, grid.nodes)
    sel = (grid.nodes >= window[0]) & (grid.nodes <= window[1])
    w_vals = dvr[sel]
    w_min, w_max = float(w_vals.min()), float(w_vals.max())
    sign_definite = w_min > 0.0 or w_max < 0.0
    if sign_definite:
        lo, hi = sorted([abs(w_min), abs(w_max)])
        M = float(hi / lo) if lo > 0 else math.inf
    else:
        M = math.inf

    a, b, c, d = strict_support
    strict = (
        supports[0][0] >= a
        and supports[0][1] < b
        and supports[1][0] > c
        and supports[1][1] <= d
    )

    report = {
        "lambda0": lambda0,
        "c_amp": c_amp,
        "supports": [list(s) for s in supports],
        "zero_mean_residual": abs(mean) / max(mean_scale, 1e-300),
        "zero_mean_ok": abs(mean) <= 1e-10 * max(mean_scale, 1e-300),
        "h1": h1,
        "h1_ok": h1 <= H1_BUDGET * (1.0 + 1e-12),
        "window": list(window),
        "window_gap_ok": gap_ok,
        "rotation_window": [w_min, w_max],
        "sign_definite": sign_definite,
        "M": M,
        "strict_support": strict,
    }
    report["valid"] = (
        report["zero_mean_ok"] and report["h1_ok"] and gap_ok and sign_definite
    )
    return prof, report


# ---------------------------------------------------------------------------
# scaling law


def scaling_law(beta, delta, lam):
    """N = round(lam^{(2-2beta+delta)/beta}) plus the derived exponents."""
    if not (0.0 < beta < 1.0):
        raise ConstructionError("beta must lie in (0,1)")
    if delta < 0.0:
        raise ConstructionError("delta must be >= 0")
    if lam < 1.0:
        raise ConstructionError("lambda must be >= 1")
    expo = (2.0 - 2.0 * beta + delta) / beta
    if expo * math.log(lam) > math.log(1e15):
        raise ConstructionError("N overflows the supported range")
    N_exact = lam**expo
    N = max(1, round(N_exact))
    return {
        "N": N,
        "N_exact": N_exact,
        "residual": abs(N - N_exact),
        "beta_critical": (2.0 - beta) * beta / (2.0 - beta**2),
        "beta_delta": (2.0 + delta - beta) * beta / (2.0 + delta - beta**2),
    }


# ---------------------------------------------------------------------------
# assembled parameters and initial data


@dataclass
class ConstructionParams:
    beta: float = 0.5
    delta: float = 0.05
    lam: float = 4.0
    N: int = None                 # derived from the scaling law when None
    f_profile: object = None
    g_profile: object = None
    f_report: dict = None
    g_report: dict = None
    amp_boost: float = 1.0

    def __post_init__(self):
        law = scaling_law(self.beta, self.delta, self.lam)
        self.law = law
        if self.N is None:
            self.N = law["N"]
        if self.g_profile is None:
            self.g_profile, self.g_report = build_g()
        if self.f_profile is None:
            self.f_profile, self.f_report = build_f()

    @property
    def osc_amplitude(self):
        return self.lam ** (1.0 - self.beta) * self.N ** (-self.beta)

    @property
    def rad_amplitude(self):
        return self.amp_boost * self.lam ** (1.0 - self.beta)

    def osc_support(self):
        a, b = self.g_profile.support
        return (a / self.lam, b / self.lam)

    def default_grid(self, n=3200, pad=1.5):
        lo = min(
            s[0] for s in _profile_supports(self.f_profile)
        ) / self.lam
        hi = max(s[1] for s in _profile_supports(self.f_profile)) / self.lam
        lo = min(lo, self.osc_support()[0])
        hi = max(hi, self.osc_support()[1])
        return RadialGrid.log_uniform(lo / pad, hi * pad, n)


class ResolutionError(ConstructionError):
    pass


def _check_resolution(grid, supports, min_per_decade=16):
    nodes = grid.nodes
    for a, b in supports:
        inside = int(np.count_nonzero((nodes >= a) & (nodes <= b)))
        decades = math.log10(b / a)
        need = max(4, int(math.ceil(min_per_decade * decades)))
        if inside < need:
            raise ResolutionError(
                f"support ({a:g}, {b:g}) covered by {inside} nodes, need {need}"
            )


def assemble_initial(params, grid=None, k_max=None):
    """PolarField of the initial data on `grid` (default: params.default_grid())."""
    if grid is None:
        grid = params.default_grid()
    N = params.N
    if k_max is None:
        k_max = 3 * N
    if k_max < N:
        raise ConstructionError("k_max must be >= N")
    lam = params.lam
    supports = [
        (a / lam, b / lam) for a, b in _profile_supports(params.f_profile)
    ] + [tuple(np.array(params.g_profile.support) / lam)]
    for a, b in supports:
        if a < grid.r_min or b > grid.r_max:
            raise ResolutionError(
                f"grid [{grid.r_min:g}, {grid.r_max:g}] does not cover ({a:g}, {b:g})"
            )
    _check_resolution(grid, supports)
    r = grid.nodes
    coeffs = np.zeros((k_max + 1, grid.n), dtype=complex)
    coeffs[0] = params.rad_amplitude * params.f_profile(lam * r)
    coeffs[N] = 0.5 * params.osc_amplitude * params.g_profile(lam * r)
    return PolarField(grid, coeffs, symmetry_N=N)


def initial_parts(params, grid=None, k_max=None):
    """(radial part, oscillatory part) of the initial data, same grid."""
    full = assemble_initial(params, grid=grid, k_max=k_max)
    rad = np.zeros_like(full.coeffs)
    rad[0] = full.coeffs[0]
    osc = full.coeffs.copy()
    osc[0] = 0.0
    return (
        PolarField(full.grid, rad, symmetry_N=full.symmetry_N),
        PolarField(full.grid, osc, symmetry_N=full.symmetry_N),
    )


# ---------------------------------------------------------------------------
# gluing plan


@dataclass
class GluingPiece:
    index: int                  # 1-based
    center: tuple               # (R_j, 0)
    amplitude: float            # 2^-j
    time_dilation: float        # 2^j
    params: ConstructionParams


@dataclass
class GluingPlan:
    J: int
    v_max: float
    D: list                     # D_1 .. D_J
    R: list                     # R_1 .. R_J
    pieces: list                # GluingPiece


def separation_floor(j, v_max):
    """Minimum admissible half-separation for piece j."""
    return 4.0**j * (v_max + 1.0) + 2.0


def assemble_gluing(base_params, J, v_max, lam_growth=1.5):
    """Gluing plan with J pieces at the floor separations.

    Piece j uses lam scaled by lam_growth^{j-1} (stronger winding for later
    pieces), amplitude 2^-j and time dilation 2^j.
    """
    if J < 1:
        raise ConstructionError("J must be >= 1")
    # half-separation: the admissibility floor, but never less than the
    # piece's own support radius plus a unit margin
    lams = [base_params.lam * lam_growth ** (j - 1) for j in range(1, J + 1)]
    f_prof = base_params.f_profile or build_f()[0]
    outer = max(s[1] for s in _profile_supports(f_prof))
    D = [
        max(separation_floor(j, v_max), outer / lams[j - 1] + 1.0)
        for j in range(1, J + 1)
    ]
    if max(D) > 1e15:
        raise ConstructionError("separations overflow the supported range")
    R = [0.0]
    for j in range(1, J):
        R.append(R[-1] + D[j - 1] + D[j])
    pieces = []
    for j in range(1, J + 1):
        p = ConstructionParams(
            beta=base_params.beta,
            delta=base_params.delta,
            lam=base_params.lam * lam_growth ** (j - 1),
            f_profile=base_params.f_profile,
            g_profile=base_params.g_profile,
            f_report=base_params.f_report,
            g_report=base_params.g_report,
            amp_boost=base_params.amp_boost,
        )
        pieces.append(
            GluingPiece(
                index=j,
                center=(R[j - 1], 0.0),
                amplitude=2.0**-j,
                time_dilation=2.0**j,
                params=p,
            )
        )
    return GluingPlan(J=J, v_max=v_max, D=D, R=R, pieces=pieces)


def plan_support_distances(plan, support_radius=None):
    """Pairwise min distances between piece supports (at t=0)."""
    out = {}
    for i in range(plan.J):
        ri = support_radius or max(
            s[1] for s in _profile_supports(plan.pieces[i].params.f_profile)
        ) / plan.pieces[i].params.lam
        for j in range(i + 1, plan.J):
            rj = support_radius or max(
                s[1] for s in _profile_supports(plan.pieces[j].params.f_profile)
            ) / plan.pieces[j].params.lam
            dist = abs(plan.R[j] - plan.R[i]) - ri - rj
            out[(i + 1, j + 1)] = dist
    return out
