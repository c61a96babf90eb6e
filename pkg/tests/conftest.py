"""Shared fixtures and small builders used across the test modules."""

import numpy as np

from tubeq.frames import build_frames, connection_coefficients, hashimoto_rotate
from tubeq.geometry import DomainAxis, Embedding, Jet, SampleGrid, catalog_shape, make_grid


def interval_grid(lo, hi, n, periodic=False):
    """1D SampleGrid on [lo, hi): periodic nodes at lo + j*h, otherwise
    cell centers lo + (j + 1/2)*h."""
    h = (hi - lo) / n
    if periodic:
        axis = lo + h * np.arange(n)
    else:
        axis = lo + h * (np.arange(n) + 0.5)
    return SampleGrid(counts=(n,), spacings=(h,), axes=(axis,), periodic=(periodic,))


def flat_metric(grid):
    """Identity metric field matching the grid: shape (m, k, k)."""
    k = grid.ndim
    met = np.zeros((grid.size, k, k))
    met[:, np.arange(k), np.arange(k)] = 1.0
    return met


def random_smooth_metric(grid, rng, amp=0.35):
    """Strictly positive smooth 1D metric (m, 1, 1) built from a short
    trigonometric series on a periodic grid."""
    s = grid.axes[0]
    period = grid.spacings[0] * grid.counts[0]
    field = np.ones_like(s)
    for k in range(1, 4):
        a = amp * rng.uniform(-1.0, 1.0) / k
        phi = rng.uniform(0.0, 2.0 * np.pi)
        field = field + a * np.cos(2.0 * np.pi * k * s / period + phi)
    assert field.min() > 0.05
    return (field**2).reshape(-1, 1, 1)


def pipeline(name, params, counts):
    """Catalog shape -> (embedding, grid, frames, coefficients), unrotated."""
    emb = catalog_shape(name, params)
    grid = make_grid(emb, counts)
    fr = build_frames(emb, grid)
    co = connection_coefficients(emb, fr)
    return emb, grid, fr, co


def rotated_pipeline(name, params, counts):
    """Same as pipeline() but with the normal-gauge rotation applied."""
    emb, grid, fr, co = pipeline(name, params, counts)
    fr2, co2 = hashimoto_rotate(co, fr)
    return emb, grid, fr2, co2


def segment_embedding(length, ambient=2):
    """Straight unit-speed segment of the given length along the x axis."""

    def jet(params, order=3):
        pts = np.atleast_2d(np.asarray(params, dtype=float))
        m = pts.shape[0]
        y = np.zeros((m, ambient))
        y[:, 0] = pts[:, 0]
        dy = np.zeros((m, 1, ambient))
        dy[:, 0, 0] = 1.0
        d2y = np.zeros((m, 1, 1, ambient)) if order >= 2 else None
        d3y = np.zeros((m, 1, 1, 1, ambient)) if order >= 3 else None
        return Jet(y=y, dy=dy, d2y=d2y, d3y=d3y)

    return Embedding(
        ambient_dim=ambient,
        intrinsic_dim=1,
        domain=(DomainAxis(0.0, length, periodic=False),),
        jet=jet,
        name="segment",
    )


def planar_circle_e3(radius=1.0):
    """Unit-speed circle of the given radius in the z = 0 plane of E^3."""
    r = radius

    def jet(params, order=3):
        pts = np.atleast_2d(np.asarray(params, dtype=float))
        t = pts[:, 0] / r
        m = pts.shape[0]
        y = np.stack([r * np.cos(t), r * np.sin(t), np.zeros(m)], axis=-1)
        dy = np.stack([-np.sin(t), np.cos(t), np.zeros(m)], axis=-1)[:, None, :]
        d2y = None
        d3y = None
        if order >= 2:
            d2y = np.stack([-np.cos(t) / r, -np.sin(t) / r, np.zeros(m)], axis=-1)
            d2y = d2y[:, None, None, :]
        if order >= 3:
            d3y = np.stack([np.sin(t) / r**2, -np.cos(t) / r**2, np.zeros(m)], axis=-1)
            d3y = d3y[:, None, None, None, :]
        return Jet(y=y, dy=dy, d2y=d2y, d3y=d3y)

    return Embedding(
        ambient_dim=3,
        intrinsic_dim=1,
        domain=(DomainAxis(0.0, 2.0 * np.pi * r, periodic=True),),
        jet=jet,
        name="planar_circle_e3",
    )


def wobbly_closed_curve_e3(wobble=0.3):
    """Closed nonplanar curve (cos t, sin t, wobble*sin 2t), parametrized by
    t on [0, 2pi). Not unit speed; torsion is nonzero and sign-varying."""
    c = wobble

    def jet(params, order=3):
        pts = np.atleast_2d(np.asarray(params, dtype=float))
        t = pts[:, 0]
        y = np.stack([np.cos(t), np.sin(t), c * np.sin(2 * t)], axis=-1)
        dy = np.stack([-np.sin(t), np.cos(t), 2 * c * np.cos(2 * t)], axis=-1)[:, None, :]
        d2y = None
        d3y = None
        if order >= 2:
            d2y = np.stack([-np.cos(t), -np.sin(t), -4 * c * np.sin(2 * t)], axis=-1)
            d2y = d2y[:, None, None, :]
        if order >= 3:
            d3y = np.stack([np.sin(t), -np.cos(t), -8 * c * np.cos(2 * t)], axis=-1)
            d3y = d3y[:, None, None, None, :]
        return Jet(y=y, dy=dy, d2y=d2y, d3y=d3y)

    return Embedding(
        ambient_dim=3,
        intrinsic_dim=1,
        domain=(DomainAxis(0.0, 2.0 * np.pi, periodic=True),),
        jet=jet,
        name="wobbly_curve",
    )


def write_circle_csv(path, n=257, closed=True, four_d=False, warp=0.0):
    """Sample the unit circle into a curve CSV; optionally warp the
    parameter column to a non-uniform monotone spacing."""
    t_end = 2.0 * np.pi if closed else 0.6 * np.pi
    t = np.linspace(0.0, t_end, n)
    s = t + warp * np.sin(t)
    cols = ["s", "x", "y", "z"] + (["w"] if four_d else [])
    rows = [",".join(cols)]
    for ti, si in zip(t, s):
        vals = [si, np.cos(ti), np.sin(ti), 0.0]
        if four_d:
            vals.append(0.0)
        rows.append(",".join(f"{v:.17g}" for v in vals))
    path.write_text("\n".join(rows) + "\n")
    return path
