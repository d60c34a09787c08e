"""Method-of-lines integration of the vorticity transport equation.

State is a PolarField; the advection term v_r d_r omega + (v_alpha/r)
d_alpha omega is evaluated pseudo-spectrally in alpha (padded transforms,
so products of band-limited factors are dealiased exactly) and with
4th-order centered differences in log r.  Time stepping is RK4 with a CFL
bound measured on the current velocity.

The angular CFL restriction only counts nodes where the field actually
has angular variation: a radial field is invariant under rotation however
fast, and the strongly swirling region near the inner ring of the radial
part would otherwise throttle dt for no accuracy gain.
"""

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.fft import irfft, next_fast_len, rfft

from .field import PolarField
from .biot_savart import solve_velocity


@dataclass
class EvolveConfig:
    t_end: float = 1.0
    cfl: float = 0.5
    dt: float = None               # fixed step size (overrides CFL)
    dealias: bool = True
    filter_strength: float = 0.0
    n_monitors: int = 11
    guard_factor: float = 4.0
    max_steps: int = 500_000
    velocity_hook: object = None   # callable PolarField -> VelocityModes (tests)

    def __post_init__(self):
        if not (0.0 < self.cfl <= 1.0):
            raise ValueError("cfl must lie in (0, 1]")
        if self.filter_strength < 0.0:
            raise ValueError("filter_strength must be >= 0")


class _Workspace:
    """Padded-transform and radial-derivative machinery for one grid."""

    def __init__(self, grid, k_max, dealias):
        self.grid = grid
        self.k_max = k_max
        min_pad = 3 * k_max + 1 if dealias else 2 * k_max + 2
        self.n_pad = next_fast_len(max(min_pad, 8), real=True)
        self.dalpha = 2.0 * math.pi / self.n_pad
        self.r = grid.nodes
        self.k = np.arange(k_max + 1)
        u = grid.log_nodes
        du = np.diff(u)
        self.uniform_u = np.allclose(du, du[0], rtol=1e-10)
        self.du = du[0] if self.uniform_u else None

    def synth(self, coeffs):
        """(k_max+1, n) coefficients -> (n, n_pad) physical values."""
        spec = np.zeros((self.grid.n, self.n_pad // 2 + 1), dtype=complex)
        spec[:, : self.k_max + 1] = coeffs.T * self.n_pad
        return irfft(spec, n=self.n_pad, axis=1)

    def analyze(self, values):
        spec = rfft(values, axis=1) / self.n_pad
        return spec[:, : self.k_max + 1].T.copy()

    def ddr(self, coeffs):
        """Radial derivative of coefficient rows, 4th order in u = log r."""
        if not self.uniform_u:
            return np.gradient(coeffs, self.r, axis=1)
        c = coeffs
        out = np.empty_like(c)
        du = self.du
        out[:, 2:-2] = (
            c[:, :-4] - 8.0 * c[:, 1:-3] + 8.0 * c[:, 3:-1] - c[:, 4:]
        ) / (12.0 * du)
        # one-sided 4th-order closures (fields vanish near the edges anyway)
        edge = np.array(
            [[-25.0, 48.0, -36.0, 16.0, -3.0], [-3.0, -10.0, 18.0, -6.0, 1.0]]
        ) / (12.0 * du)
        out[:, 0] = c[:, :5] @ edge[0]
        out[:, 1] = c[:, :5] @ edge[1]
        out[:, -1] = -(c[:, -5:][:, ::-1] @ edge[0])
        out[:, -2] = -(c[:, -5:][:, ::-1] @ edge[1])
        return out / self.r


def _advect(ws, coeffs, vr_phys, va_over_r_phys):
    """- (v_r d_r + (v_alpha/r) d_alpha) applied to one coefficient array."""
    wr = ws.synth(ws.ddr(coeffs))
    wa = ws.synth(1j * ws.k[:, None] * coeffs)
    return -ws.analyze(vr_phys * wr + va_over_r_phys * wa)


def _velocity(omega, config):
    if config.velocity_hook is not None:
        return config.velocity_hook(omega)
    return solve_velocity(omega, warn_tail=False)


def _rhs(ws, comps, omega_full, config):
    vm = _velocity(omega_full, config)
    vr = ws.synth(vm.vr)
    va_r = ws.synth(vm.valpha) / ws.r[:, None]
    return [_advect(ws, c, vr, va_r) for c in comps], vm


def step(omega, dt, config=None, companions=(), workspace=None):
    """One integrating-factor RK4 step (Lawson scheme).

    Returns (new field, new companions, velocity at start).  companions:
    extra PolarFields advected passively by the same velocity.

    The advection by the angular-mean rotation, -i k Omega(r) c_k with
    Omega = v_alpha[k=0]/r frozen at the step start, is applied through its
    exact unitary propagator exp(-i k Omega tau).  Only the residual terms
    go through the RK4 stages, so the (arbitrarily stiff, purely rotational)
    differential-rotation term never restricts stability.
    """
    config = config or EvolveConfig()
    ws = workspace or _Workspace(omega.grid, omega.k_max, config.dealias)
    comps = [omega.coeffs] + [c.coeffs for c in companions]

    kcol = ws.k[:, None]
    rhs1, vm0 = _rhs(ws, comps, omega, config)
    omega_rot = (vm0.valpha[0].real / ws.r)[None, :]
    rot = 1j * kcol * omega_rot

    def residual(rhs_list, ys):
        # N(y) = f(y) - A y with A y = -i k Omega y
        return [d + rot * y for d, y in zip(rhs_list, ys)]

    def stage(ys):
        fld = PolarField(omega.grid, ys[0], omega.symmetry_N)
        rhs_list, _ = _rhs(ws, ys, fld, config)
        return residual(rhs_list, ys)

    e_half = np.exp(-rot * (0.5 * dt))
    e_full = np.exp(-rot * dt)

    k1 = residual(rhs1, comps)
    y2 = [e_half * (c + 0.5 * dt * d) for c, d in zip(comps, k1)]
    k2 = [np.conj(e_half) * d for d in stage(y2)]
    y3 = [e_half * (c + 0.5 * dt * d) for c, d in zip(comps, k2)]
    k3 = [np.conj(e_half) * d for d in stage(y3)]
    y4 = [e_full * (c + dt * d) for c, d in zip(comps, k3)]
    k4 = [np.conj(e_full) * d for d in stage(y4)]

    out = [
        e_full * (c + (dt / 6.0) * (a + 2.0 * b + 2.0 * d + e))
        for c, a, b, d, e in zip(comps, k1, k2, k3, k4)
    ]
    if config.filter_strength > 0.0:
        damp = np.exp(
            -config.filter_strength * (ws.k / max(ws.k_max, 1)) ** 8
        )[:, None]
        out = [c * damp for c in out]
    new = PolarField(omega.grid, out[0], omega.symmetry_N)
    new_comp = [
        PolarField(omega.grid, c, f.symmetry_N)
        for c, f in zip(out[1:], companions)
    ]
    return new, new_comp, vm0


def _cfl_dt(ws, omega, vm, cfl):
    scale = np.abs(omega.coeffs).max()
    if scale == 0.0:
        return math.inf
    vr_max = np.abs(ws.synth(vm.vr)).max(axis=1)
    # the angular-mean rotation is integrated exactly by the step's
    # unitary propagator; only the residual angular velocity counts here
    va_resid = vm.valpha.copy()
    va_resid[0] = 0.0
    va_max = np.abs(ws.synth(va_resid)).max(axis=1)
    dr = np.gradient(ws.r)
    dt = math.inf
    with np.errstate(divide="ignore"):
        dt = min(dt, float(np.min(np.where(vr_max > 0, dr / vr_max, math.inf))))
        lim = np.where(va_max > 0, ws.r * ws.dalpha / va_max, math.inf)
        dt = min(dt, float(np.min(lim)))
    # Lawson residual stiffness: the unitary propagator handles the mean
    # rotation exactly, but its phase must not wrap between neighbouring
    # nodes within one step, else the finite-difference radial derivative
    # inside the residual stages aliases and amplifies node-scale content.
    if omega.k_max >= 1:
        omega_rot = vm.valpha[0].real / ws.r
        wrap = float(np.abs(np.diff(omega_rot)).max()) * omega.k_max
        if wrap > 0.0:
            dt = min(dt, math.pi / wrap)
    return cfl * dt


def _osc_wavelength(ws, osc):
    """(mean radial wavelength, local grid spacing at the mass centroid)."""
    c = osc.coeffs
    if np.abs(c).max() == 0.0:
        return math.inf, 0.0
    pair = np.full(osc.k_max + 1, 2.0)
    pair[0] = 1.0
    w = osc.grid.quad_weights
    dens = (pair[:, None] * np.abs(c) ** 2 * w).sum(axis=0)
    mass = dens.sum()
    rbar = float((dens * ws.r).sum() / mass)
    dr_local = float(np.interp(rbar, ws.r, np.gradient(ws.r)))
    # node-to-node phase increment: for c ~ e^{i kappa r} the jump obeys
    # |dc| = 2 |sin(kappa dr / 2)| |c|, which saturates instead of
    # aliasing to a small value when the oscillation is under-resolved
    dc = np.diff(c, axis=1)
    wm = 0.5 * (w[1:] + w[:-1])
    jump_energy = float((pair[:, None] * np.abs(dc) ** 2 * wm).sum())
    s_half = 0.5 * math.sqrt(jump_energy / mass)
    phase = 2.0 * math.asin(min(s_half, 1.0))
    if phase <= 0.0:
        return math.inf, dr_local
    return (2.0 * math.pi / phase) * dr_local, dr_local


@dataclass
class TrajectoryRecord:
    times: list = dc_field(default_factory=list)
    columns: dict = dc_field(default_factory=dict)
    termination: str = "t_end"
    steps: int = 0

    def add(self, t, **kwargs):
        if self.times and t <= self.times[-1]:
            raise ValueError("monitor timestamps must be strictly increasing")
        self.times.append(t)
        for key, val in kwargs.items():
            self.columns.setdefault(key, []).append(val)

    def col(self, key):
        return np.asarray(self.columns[key])


def run(
    omega0,
    config,
    rad0=None,
    osc0=None,
    s_values=(),
    pseudo=None,
    sobolev_resolution=None,
    extra_monitors=None,
):
    """Integrate to t_end with periodic monitors.

    rad0/osc0: optional decomposition parts advected as passive tracers by
    the shared velocity.  s_values: Hdot^s norms of the oscillatory part
    recorded per monitor.  pseudo: optional PseudoState, phase-advanced
    every step and compared at monitors.
    """
    from .field import lp_norm, support_annulus, mode_symmetry_leakage
    from . import sobolev as sb
    from . import pseudosolution as ps

    ws = _Workspace(omega0.grid, omega0.k_max, config.dealias)
    omega = omega0
    companions = [c for c in (rad0, osc0) if c is not None]
    osc_idx = len(companions) - 1 if osc0 is not None else None
    has_parts = rad0 is not None and osc0 is not None

    record = TrajectoryRecord()
    t = 0.0
    monitor_times = np.linspace(0.0, config.t_end, max(config.n_monitors, 2))
    next_monitor = 0

    def osc_part():
        if osc_idx is not None:
            return companions[osc_idx]
        c = omega.coeffs.copy()
        c[0] = 0.0
        return PolarField(omega.grid, c, omega.symmetry_N)

    def do_monitor(vm):
        osc = osc_part()
        row = {
            "l1": lp_norm(omega, 1),
            "l2": lp_norm(omega, 2),
            "linf": lp_norm(omega, np.inf),
        }
        osc_scale = np.abs(osc.coeffs).max()
        ann = (
            support_annulus(osc, 1e-8 * osc_scale) if osc_scale > 0 else None
        )
        row["supp_osc_lo"] = ann[0] if ann else math.nan
        row["supp_osc_hi"] = ann[1] if ann else math.nan
        # C^1 size of the oscillatory part
        if osc_scale > 0:
            gr = np.abs(ws.synth(ws.ddr(osc.coeffs))).max()
            ga = np.abs(
                ws.synth(1j * ws.k[:, None] * osc.coeffs) / ws.r[:, None]
            ).max()
            row["c1_osc"] = math.hypot(gr, ga)
        else:
            row["c1_osc"] = 0.0
        if omega.symmetry_N:
            row["leakage"] = mode_symmetry_leakage(omega, omega.symmetry_N)
        for s in s_values:
            spec = sb.SobolevSpec(s=s)
            if sobolev_resolution:
                for key, val in sobolev_resolution.items():
                    setattr(spec, key, val)
            row[f"hs_{s:g}"] = sb.norm(osc, spec)
        if has_parts:
            drift = lp_norm(omega - (companions[0] + companions[1]), 2)
            row["decomp_err"] = drift / max(row["l2"], 1e-300)
        if pseudo is not None:
            rep = ps.pseudo_error(osc, pseudo)
            row["pseudo_err_l2"] = rep.error_l2
            row["pseudo_err_rel"] = rep.error_rel
            row["phase_grad"] = ps.phase_gradient_mean(pseudo)
        if extra_monitors:
            row.update(extra_monitors(t, omega, osc, vm))
        record.add(t, **row)

    vm = _velocity(omega, config)
    while True:
        if next_monitor < monitor_times.size and t >= monitor_times[
            next_monitor
        ] - 1e-12:
            do_monitor(vm)
            next_monitor += 1
        if t >= config.t_end - 1e-12:
            record.termination = "t_end"
            break
        if record.steps >= config.max_steps:
            record.termination = "max_steps"
            break
        wl, dr_loc = _osc_wavelength(ws, osc_part())
        if wl < config.guard_factor * dr_loc:
            record.termination = "resolution"
            break

        dt = config.dt if config.dt is not None else _cfl_dt(ws, omega, vm, config.cfl)
        if not math.isfinite(dt) or dt <= 0:
            dt = config.t_end - t
        horizon = config.t_end
        if next_monitor < monitor_times.size:
            horizon = monitor_times[next_monitor]
        dt = min(dt, horizon - t)

        omega, companions, _ = step(
            omega, dt, config, companions, workspace=ws
        )
        t += dt
        record.steps += 1
        vm_new = _velocity(omega, config)
        if pseudo is not None:
            ps.advance_phase(pseudo, dt, vm, vm_new)
        vm = vm_new

    return omega, companions, record
