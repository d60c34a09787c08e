"""Explicit approximate solution: steady radial part plus an oscillatory
part whose angular phase is tilted by the time-integrated mean rotation.

The phase Phi(r, t) accumulates v_alpha[A omega](r) / r by trapezoid in
time, where A omega is the angular average of the evolving solution.  The
oscillatory part keeps its single angular mode N with the complex factor
exp(-i N Phi(r)) on the radial coefficient.
"""

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .field import PolarField, lp_norm
from .biot_savart import solve_velocity


@dataclass
class PseudoState:
    params: object
    grid: object
    phase: np.ndarray
    t: float = 0.0
    sign_changes: int = 0         # integrand sign flips seen (recorded, not assumed)
    _last_sign: float = 0.0

    def copy(self):
        return PseudoState(
            self.params, self.grid, self.phase.copy(), self.t,
            self.sign_changes, self._last_sign,
        )


def new_state(params, grid):
    return PseudoState(params=params, grid=grid, phase=np.zeros(grid.n))


def rotation_rate(omega_now):
    """v_alpha[A omega](r) / r from the k=0 Biot-Savart solve."""
    c = np.zeros((1, omega_now.grid.n), dtype=complex)
    c[0] = omega_now.coeffs[0]
    vm = solve_velocity(PolarField(omega_now.grid, c), warn_tail=False)
    return vm.valpha[0].real / omega_now.grid.nodes


def advance_phase(state, dt, vm_start, vm_end):
    """Trapezoid update of Phi over one accepted solver step.

    vm_start/vm_end: VelocityModes of the full solution at t and t+dt (the
    k=0 row is exactly the velocity of the angular average, by linearity).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    r = state.grid.nodes
    i0 = vm_start.valpha[0].real / r
    i1 = vm_end.valpha[0].real / r
    state.phase = state.phase + 0.5 * dt * (i0 + i1)
    state.t += dt
    s = float(np.sign(np.sum(i1)))
    if s != 0.0 and state._last_sign != 0.0 and s != state._last_sign:
        state.sign_changes += 1
    if s != 0.0:
        state._last_sign = s
    return state


def advance_phase_field(state, omega_now, dt):
    """Single-field form: one velocity solve, endpoint-rule update."""
    r = state.grid.nodes
    rate = rotation_rate(omega_now)
    state.phase = state.phase + dt * rate
    state.t += dt
    return state


def eval_pseudo(state, k_max=None):
    """The pseudosolution field at state.t on state.grid."""
    p = state.params
    N = p.N
    if k_max is None:
        k_max = N
    grid = state.grid
    r = grid.nodes
    coeffs = np.zeros((max(k_max, N) + 1, grid.n), dtype=complex)
    coeffs[0] = p.rad_amplitude * p.f_profile(p.lam * r)
    coeffs[N] = (
        0.5 * p.osc_amplitude * p.g_profile(p.lam * r)
        * np.exp(-1j * N * state.phase)
    )
    return PolarField(grid, coeffs, symmetry_N=N)


def eval_pseudo_osc(state):
    fld = eval_pseudo(state)
    c = fld.coeffs.copy()
    c[0] = 0.0
    return PolarField(fld.grid, c, symmetry_N=fld.symmetry_N)


@dataclass
class PseudoErrorReport:
    error_l2: float
    error_rel: float
    bound_value: float            # lam^{2-2beta} N^{-beta} log N reference scale


def pseudo_error(omega_osc, state):
    """L^2 distance between the evolved oscillatory part and the model."""
    model = eval_pseudo_osc(state)
    err = lp_norm(omega_osc - model, 2)
    ref = lp_norm(model, 2)
    p = state.params
    bound = (
        p.lam ** (2.0 - 2.0 * p.beta) * p.N ** (-p.beta) * math.log(p.N)
        if p.N > 1
        else math.inf
    )
    return PseudoErrorReport(
        error_l2=err,
        error_rel=err / ref if ref > 0 else math.inf,
        bound_value=bound,
    )


def phase_gradient_mean(state):
    """|d_r Phi| averaged with the oscillatory part's L^2 density."""
    model = eval_pseudo_osc(state)
    dens = (np.abs(model.coeffs) ** 2).sum(axis=0) * state.grid.quad_weights
    mass = dens.sum()
    if mass == 0.0:
        return 0.0
    dphi = np.gradient(state.phase, state.grid.nodes)
    return float(np.sum(dens * np.abs(dphi)) / mass)


def osc_centroid_radius(params, grid):
    """L^2-density mean radius of the initial oscillatory part."""
    prof = params.g_profile(params.lam * grid.nodes)
    dens = prof**2 * grid.quad_weights
    return float((dens * grid.nodes).sum() / dens.sum())
