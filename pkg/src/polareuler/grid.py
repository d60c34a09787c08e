"""Radial grids with interpolatory quadrature for integrals against r dr."""

import numpy as np


class GridError(ValueError):
    pass


def _interval_weights(x):
    """Quadrature weights on arbitrary strictly increasing nodes.

    Integrates the piecewise cubic through the 4 nodes nearest each
    interval, so the rule is exact for cubics (in particular for the
    linear integrand r that appears in the constant-field check).
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2:
        raise GridError("need at least 2 nodes")
    w = np.zeros(n)
    if n < 4:
        # fall back to trapezoid
        dx = np.diff(x)
        w[:-1] += 0.5 * dx
        w[1:] += 0.5 * dx
        return w

    n_int = n - 1
    starts = np.clip(np.arange(n_int) - 1, 0, n - 4)
    stencil = starts[:, None] + np.arange(4)[None, :]      # (n_int, 4)
    xs = x[stencil]                                        # (n_int, 4)
    a = x[:-1]
    b = x[1:]
    # shift/scale each stencil for conditioning
    mid = 0.5 * (xs[:, 0] + xs[:, 3])
    scale = 0.5 * (xs[:, 3] - xs[:, 0])
    t = (xs - mid[:, None]) / scale[:, None]               # (n_int, 4)
    ta = (a - mid) / scale
    tb = (b - mid) / scale
    p = np.arange(4)
    # moments of t^p over [ta, tb]
    mom = (tb[:, None] ** (p + 1) - ta[:, None] ** (p + 1)) / (p + 1)
    V = t[:, None, :] ** p[None, :, None]                  # (n_int, 4, 4)
    q = np.linalg.solve(V, mom[:, :, None])[:, :, 0] * scale[:, None]
    np.add.at(w, stencil, q)
    return w


class SubIntervalRule:
    """4-point Gauss-Legendre points per grid interval, with the cubic
    interpolation matrix taking node values to values at those points."""

    def __init__(self, nodes):
        x = np.asarray(nodes, dtype=float)
        n = x.size
        n_int = n - 1
        starts = np.clip(np.arange(n_int) - 1, 0, n - 4)
        self.stencil = starts[:, None] + np.arange(4)[None, :]
        xs = x[self.stencil]
        gx, gw = np.polynomial.legendre.leggauss(4)
        mid = 0.5 * (x[:-1] + x[1:])
        half = 0.5 * np.diff(x)
        self.points = mid[:, None] + half[:, None] * gx[None, :]   # (n_int, 4)
        self.weights = half[:, None] * gw[None, :]
        P = np.ones((n_int, 4, 4))
        for a in range(4):
            for b in range(4):
                if a != b:
                    P[:, :, a] *= (self.points - xs[:, None, b]) / (
                        xs[:, None, a] - xs[:, None, b]
                    )
        self.interp = P

    def values_at(self, node_values):
        """Interpolate node values to the Gauss points; (..., n) -> (..., n_int, 4)."""
        v = np.asarray(node_values)
        return np.einsum("iqs,...is->...iq", self.interp, v[..., self.stencil])


class RadialGrid:
    """Strictly increasing radii in [r_min, r_max] with weights for
    integrals of the form int h(r) r dr over the covered range.

    Fields are treated as zero below r_min; the coordinate origin is
    never part of the grid.
    """

    def __init__(self, nodes, spacing="custom"):
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise GridError("nodes must be a 1-d array with >= 2 entries")
        if nodes[0] <= 0.0:
            raise GridError("r_min must be positive")
        if np.any(np.diff(nodes) <= 0.0):
            raise GridError("nodes must be strictly increasing")
        self.nodes = nodes
        self.r_min = float(nodes[0])
        self.r_max = float(nodes[-1])
        self.spacing = spacing
        self.log_nodes = np.log(nodes)
        # weights c_i for int H(r) dr; against r dr the weight is c_i * r_i
        self._line_weights = _interval_weights(nodes)
        self.quad_weights = self._line_weights * nodes
        self._subrule = None

    @classmethod
    def log_uniform(cls, r_min, r_max, n):
        nodes = np.geomspace(r_min, r_max, n)
        return cls(nodes, spacing="log-uniform")

    @classmethod
    def uniform(cls, r_min, r_max, n):
        nodes = np.linspace(r_min, r_max, n)
        return cls(nodes, spacing="uniform")

    @property
    def n(self):
        return self.nodes.size

    def subrule(self):
        if self._subrule is None:
            self._subrule = SubIntervalRule(self.nodes)
        return self._subrule

    def integrate_r(self, values):
        """int values(r) r dr over [r_min, r_max] (values sampled at nodes)."""
        return np.tensordot(np.asarray(values), self.quad_weights, axes=([-1], [0]))

    def integrate(self, values):
        """int values(r) dr over [r_min, r_max]."""
        return np.tensordot(np.asarray(values), self._line_weights, axes=([-1], [0]))

    def __eq__(self, other):
        return (
            isinstance(other, RadialGrid)
            and self.nodes.shape == other.nodes.shape
            and np.array_equal(self.nodes, other.nodes)
        )

    def __hash__(self):
        return hash((self.nodes.size, self.r_min, self.r_max))

    def __repr__(self):
        return (
            f"RadialGrid(n={self.n}, r_min={self.r_min:g}, "
            f"r_max={self.r_max:g}, spacing={self.spacing!r})"
        )
