"""Scalar fields on R^2 as truncated angular Fourier series over a radial grid.

Coefficient convention, used everywhere in this package:

    f(r, alpha) = f_0(r) + 2 Re sum_{k>=1} f_k(r) exp(i k alpha)

so a physical cos(N alpha) of unit amplitude corresponds to a mode-N
coefficient of 1/2.  Only k >= 0 is stored; negative modes are the
conjugates, which makes every synthesized field real.
"""

import json

import numpy as np
from scipy.interpolate import PchipInterpolator

from .grid import RadialGrid


class DomainError(ValueError):
    """Query outside the radial domain of a field."""


class AliasingError(ValueError):
    """Angular sampling too coarse for the requested mode count."""


def _next_fast_len(n):
    m = 1
    while m < n:
        m *= 2
    return m


class PolarField:
    """Immutable field: complex coefficients omega_k(r_i), k = 0..k_max."""

    def __init__(self, grid, coeffs, symmetry_N=None):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.ndim != 2 or coeffs.shape[1] != grid.n:
            raise ValueError("coeffs must have shape (k_max+1, n_nodes)")
        self.grid = grid
        self.coeffs = coeffs
        self.coeffs.setflags(write=False)
        self.k_max = coeffs.shape[0] - 1
        self.symmetry_N = symmetry_N
        self._interp = {}

    @classmethod
    def zero(cls, grid, k_max, symmetry_N=None):
        return cls(grid, np.zeros((k_max + 1, grid.n), dtype=complex), symmetry_N)

    @classmethod
    def from_radial(cls, grid, values):
        c = np.zeros((1, grid.n), dtype=complex)
        c[0] = np.asarray(values, dtype=float)
        return cls(grid, c)

    @classmethod
    def from_mode(cls, grid, k, values, symmetry_N=None):
        """Field with a single angular mode k (coefficient values)."""
        c = np.zeros((k + 1, grid.n), dtype=complex)
        c[k] = values
        return cls(grid, c, symmetry_N=symmetry_N)

    # ---- algebra (symmetry_N propagates when compatible) ----

    def _merged_symmetry(self, other):
        if self.symmetry_N == other.symmetry_N:
            return self.symmetry_N
        return None

    def __add__(self, other):
        if self.grid is not other.grid and self.grid != other.grid:
            raise ValueError("grid mismatch")
        km = max(self.k_max, other.k_max)
        c = np.zeros((km + 1, self.grid.n), dtype=complex)
        c[: self.k_max + 1] += self.coeffs
        c[: other.k_max + 1] += other.coeffs
        return PolarField(self.grid, c, self._merged_symmetry(other))

    def __sub__(self, other):
        return self + (other * (-1.0))

    def __mul__(self, scalar):
        return PolarField(self.grid, self.coeffs * scalar, self.symmetry_N)

    __rmul__ = __mul__

    # ---- evaluation ----

    def _mode_interp(self, k):
        if k not in self._interp:
            re = PchipInterpolator(self.grid.nodes, self.coeffs[k].real, extrapolate=False)
            im = PchipInterpolator(self.grid.nodes, self.coeffs[k].imag, extrapolate=False)
            self._interp[k] = (re, im)
        return self._interp[k]

    def coeffs_at(self, r):
        """Coefficient values at arbitrary radii (cubic monotone interpolation).

        Radii below r_min evaluate to 0; above r_max raise DomainError.
        """
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if np.any(r > self.grid.r_max * (1 + 1e-12)):
            raise DomainError("radius beyond r_max")
        out = np.zeros((self.k_max + 1, r.size), dtype=complex)
        inside = (r >= self.grid.r_min) & (r <= self.grid.r_max)
        if np.any(inside):
            ri = np.clip(r[inside], self.grid.r_min, self.grid.r_max)
            for k in range(self.k_max + 1):
                re, im = self._mode_interp(k)
                out[k, inside] = re(ri) + 1j * im(ri)
        return out

    def node_values(self, n_alpha=None):
        """Real physical values on the grid nodes x uniform alpha nodes.

        alpha_j = 2 pi j / n_alpha; returns array (n_nodes, n_alpha).
        """
        if n_alpha is None:
            n_alpha = _next_fast_len(2 * self.k_max + 2)
        if n_alpha < 2 * self.k_max + 2:
            raise AliasingError(
                f"need n_alpha >= {2 * self.k_max + 2}, got {n_alpha}"
            )
        spec = np.zeros((self.grid.n, n_alpha // 2 + 1), dtype=complex)
        spec[:, : self.k_max + 1] = self.coeffs.T
        return np.fft.irfft(spec * n_alpha, n=n_alpha, axis=1)


def synthesize(field, points):
    """Evaluate a field at (r, alpha) points; returns real values."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    r, alpha = pts[:, 0], pts[:, 1]
    ck = field.coeffs_at(r)                      # (k_max+1, npts)
    k = np.arange(field.k_max + 1)
    phase = np.exp(1j * np.outer(k, alpha))
    vals = ck[0].real * 0.0
    vals = (ck[0] * phase[0]).real
    if field.k_max >= 1:
        vals = vals + 2.0 * np.real(np.sum(ck[1:] * phase[1:], axis=0))
    return vals


def analyze(grid, samples, k_max, symmetry_N=None):
    """Inverse of synthesize on a grid x uniform-alpha sampling.

    samples has shape (n_nodes, n_alpha) with alpha_j = 2 pi j / n_alpha.
    """
    samples = np.asarray(samples, dtype=float)
    n_alpha = samples.shape[1]
    if n_alpha < 2 * k_max + 2:
        raise AliasingError(f"need n_alpha >= {2 * k_max + 2}, got {n_alpha}")
    spec = np.fft.rfft(samples, axis=1) / n_alpha
    coeffs = spec[:, : k_max + 1].T.copy()
    return PolarField(grid, coeffs, symmetry_N=symmetry_N)


def angular_average(field):
    """Projection onto the angular mean: (1/2pi) int f dalpha."""
    c = np.zeros((1, field.grid.n), dtype=complex)
    c[0] = field.coeffs[0]
    return PolarField(field.grid, c, symmetry_N=field.symmetry_N)


def lp_norm(field, p):
    """L^p(R^2) norm by quadrature (p = inf via a 4x-refined alpha grid)."""
    if p == np.inf or p == "inf":
        n_alpha = _next_fast_len(4 * (2 * field.k_max + 2))
        vals = field.node_values(n_alpha)
        return float(np.max(np.abs(vals)))
    p = float(p)
    if p < 1:
        raise ValueError("p must be >= 1")
    if p == 2.0:
        # Parseval-consistent quadrature: 2pi sum_k c_k int |f_k|^2 r dr
        pair = np.full(field.k_max + 1, 2.0)
        pair[0] = 1.0
        s = 2.0 * np.pi * np.sum(
            pair[:, None] * np.abs(field.coeffs) ** 2 * field.grid.quad_weights
        )
        return float(np.sqrt(max(s, 0.0)))
    n_alpha = _next_fast_len(max(2 * field.k_max + 2, 4 * field.k_max))
    vals = field.node_values(n_alpha)
    dalpha = 2.0 * np.pi / n_alpha
    integral = np.sum(
        field.grid.integrate_r((np.abs(vals) ** p).T)
    ) * dalpha
    return float(integral ** (1.0 / p))


def support_annulus(field, threshold):
    """Smallest node annulus where max_alpha |f| exceeds threshold.

    Returns (r_lo, r_hi) or None if the field stays below threshold.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    n_alpha = _next_fast_len(4 * (2 * field.k_max + 2))
    prof = np.max(np.abs(field.node_values(n_alpha)), axis=1)
    idx = np.nonzero(prof > threshold)[0]
    if idx.size == 0:
        return None
    return (float(field.grid.nodes[idx[0]]), float(field.grid.nodes[idx[-1]]))


def mode_symmetry_leakage(field, N):
    """Fraction of L^2 energy in modes not divisible by N (k=0 included as ok)."""
    pair = np.full(field.k_max + 1, 2.0)
    pair[0] = 1.0
    energy = pair[:, None] * np.abs(field.coeffs) ** 2 * field.grid.quad_weights
    per_mode = energy.sum(axis=1)
    total = per_mode.sum()
    if total == 0.0:
        return 0.0
    bad = sum(per_mode[k] for k in range(field.k_max + 1) if k % N != 0)
    return float(bad / total)


FORMAT_VERSION = 1


def save_field(field, path):
    """Serialize to .npz: grid nodes, k_max, coefficients, metadata."""
    meta = {
        "format_version": FORMAT_VERSION,
        "spacing": field.grid.spacing,
        "k_max": field.k_max,
        "symmetry_N": field.symmetry_N,
    }
    np.savez(
        path,
        meta=json.dumps(meta, sort_keys=True),
        nodes=field.grid.nodes,
        coeffs_real=field.coeffs.real,
        coeffs_imag=field.coeffs.imag,
    )


def load_field(path):
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta["format_version"] != FORMAT_VERSION:
            raise ValueError(f"unsupported field format {meta['format_version']}")
        grid = RadialGrid(data["nodes"], spacing=meta["spacing"])
        coeffs = data["coeffs_real"] + 1j * data["coeffs_imag"]
        return PolarField(grid, coeffs, symmetry_N=meta["symmetry_N"])
