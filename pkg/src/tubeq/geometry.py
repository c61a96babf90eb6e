"""Embeddings of curves and surfaces in Euclidean space, with derivative jets.

An embedding supplies position and parameter derivatives up to third order
("jets"). Built-in analytic shapes live in :func:`catalog_shape`; tabulated
curves come in through :func:`load_sampled_curve`; anything else can be built
directly from an :class:`Embedding` with a custom jet callable.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import make_interp_spline

__all__ = [
    "DomainAxis",
    "Jet",
    "Embedding",
    "SampleGrid",
    "catalog_shape",
    "make_grid",
    "jets_fd",
    "load_sampled_curve",
]

CATALOG = ("circle", "ellipse", "helix", "torus", "sphere", "flat_torus4")


@dataclass(frozen=True)
class DomainAxis:
    """One parameter axis: half-open [lo, hi) if periodic, closed otherwise."""

    lo: float
    hi: float
    periodic: bool

    @property
    def span(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class Jet:
    """Batched derivative data of an embedding map.

    Shapes for m points in E^n with k parameters:
    y (m, n), dy (m, k, n), d2y (m, k, k, n), d3y (m, k, k, k, n).
    Entries beyond the requested order may be None.
    """

    y: np.ndarray
    dy: np.ndarray | None = None
    d2y: np.ndarray | None = None
    d3y: np.ndarray | None = None


@dataclass(frozen=True)
class Embedding:
    """Immersed curve (k=1) or surface (k=2) in E^n, n in {2, 3, 4}.

    `jet(params, order)` takes an (m, k) parameter batch and returns a
    :class:`Jet` with derivatives through `order` (0..3). The map must be an
    immersion: the dy vectors are linearly independent at every point.
    Instances are immutable; all routines treat them as read-only.
    """

    ambient_dim: int
    intrinsic_dim: int
    domain: tuple[DomainAxis, ...]
    jet: Callable[[np.ndarray, int], Jet]
    name: str = "custom"

    def __post_init__(self) -> None:
        if self.intrinsic_dim not in (1, 2):
            raise ValueError("intrinsic_dim must be 1 or 2")
        if not 2 <= self.ambient_dim <= 4:
            raise ValueError("ambient_dim must be 2, 3 or 4")
        if self.intrinsic_dim >= self.ambient_dim:
            raise ValueError("embedding needs positive codimension")
        if len(self.domain) != self.intrinsic_dim:
            raise ValueError("domain must have one axis per parameter")

    @property
    def codim(self) -> int:
        return self.ambient_dim - self.intrinsic_dim

    def position(self, params: np.ndarray) -> np.ndarray:
        return self.jet(params, 0).y


@dataclass(frozen=True)
class SampleGrid:
    """Uniform tensor grid over an embedding's parameter domain.

    Periodic axes place nodes at lo + i*h (no duplicate seam node);
    non-periodic axes are cell-centered, lo + (i + 1/2)*h, so that domain
    endpoints sit on cell faces. Node storage is C-ordered (axis 0 major).
    """

    counts: tuple[int, ...]
    spacings: tuple[float, ...]
    axes: tuple[np.ndarray, ...]
    periodic: tuple[bool, ...]

    @property
    def ndim(self) -> int:
        return len(self.counts)

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    def nodes(self) -> np.ndarray:
        """All grid nodes as an (size, ndim) array in C order."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def cell_volume(self) -> float:
        return float(np.prod(self.spacings))


def make_grid(embedding: Embedding, counts: Sequence[int]) -> SampleGrid:
    """Build a uniform SampleGrid with the given node count per axis."""
    if len(counts) != embedding.intrinsic_dim:
        raise ValueError("counts must give one node count per parameter axis")
    axes = []
    spacings = []
    for n, ax in zip(counts, embedding.domain):
        n = int(n)
        if n < 8:
            raise ValueError("each axis needs at least 8 nodes")
        h = ax.span / n
        if ax.periodic:
            axes.append(ax.lo + h * np.arange(n))
        else:
            axes.append(ax.lo + h * (np.arange(n) + 0.5))
        spacings.append(h)
    return SampleGrid(
        counts=tuple(int(n) for n in counts),
        spacings=tuple(spacings),
        axes=tuple(axes),
        periodic=tuple(ax.periodic for ax in embedding.domain),
    )


def _as_batch(params: np.ndarray, k: int) -> tuple[np.ndarray, bool]:
    p = np.asarray(params, dtype=float)
    if p.ndim == 1:
        if p.shape[0] != k:
            raise ValueError("parameter point has wrong length")
        return p[None, :], True
    if p.ndim != 2 or p.shape[1] != k:
        raise ValueError("params must be (k,) or (m, k)")
    return p, False


def _require_positive(name: str, params: Sequence[float], count: int) -> tuple[float, ...]:
    if len(params) != count:
        raise ValueError(f"{name} takes {count} parameter(s), got {len(params)}")
    vals = tuple(float(p) for p in params)
    for v in vals:
        if not math.isfinite(v) or v <= 0.0:
            raise ValueError(f"{name} parameters must be positive, got {vals}")
    return vals


def catalog_shape(name: str, params: Sequence[float]) -> Embedding:
    """Construct a built-in shape with exact analytic jets.

    Shapes: circle(R), ellipse(a, b), helix(a, b), torus(A, a) with A > a,
    sphere(R), flat_torus4(a). Curves use a single parameter; circle and
    helix are arclength-parametrized.
    """
    if name == "circle":
        (radius,) = _require_positive(name, params, 1)
        return _circle(radius)
    if name == "ellipse":
        a, b = _require_positive(name, params, 2)
        return _ellipse(a, b)
    if name == "helix":
        a, b = _require_positive(name, params, 2)
        return _helix(a, b)
    if name == "torus":
        big, small = _require_positive(name, params, 2)
        if big <= small:
            raise ValueError("torus needs ring radius > tube radius")
        return _torus(big, small)
    if name == "sphere":
        (radius,) = _require_positive(name, params, 1)
        return _sphere(radius)
    if name == "flat_torus4":
        (a,) = _require_positive(name, params, 1)
        return _flat_torus4(a)
    raise ValueError(f"unknown shape {name!r}; available: {', '.join(CATALOG)}")


def _pack_curve(y, d1, d2, d3, order: int) -> Jet:
    dy = d1[:, None, :] if order >= 1 else None
    d2y = d2[:, None, None, :] if order >= 2 else None
    d3y = d3[:, None, None, None, :] if order >= 3 else None
    return Jet(y=y, dy=dy, d2y=d2y, d3y=d3y)


def _circle(radius: float) -> Embedding:
    def jet(params, order=3):
        p, _ = _as_batch(params, 1)
        phi = p[:, 0] / radius
        c, s = np.cos(phi), np.sin(phi)
        z = np.zeros_like(c)
        y = np.stack([radius * c, radius * s, z], axis=1)
        d1 = np.stack([-s, c, z], axis=1)
        d2 = np.stack([-c / radius, -s / radius, z], axis=1)
        d3 = np.stack([s / radius**2, -c / radius**2, z], axis=1)
        return _pack_curve(y, d1, d2, d3, order)

    dom = (DomainAxis(0.0, 2.0 * math.pi * radius, True),)
    return Embedding(3, 1, dom, jet, name="circle")


def _ellipse(a: float, b: float) -> Embedding:
    def jet(params, order=3):
        p, _ = _as_batch(params, 1)
        t = p[:, 0]
        c, s = np.cos(t), np.sin(t)
        z = np.zeros_like(c)
        y = np.stack([a * c, b * s, z], axis=1)
        d1 = np.stack([-a * s, b * c, z], axis=1)
        d2 = np.stack([-a * c, -b * s, z], axis=1)
        d3 = np.stack([a * s, -b * c, z], axis=1)
        return _pack_curve(y, d1, d2, d3, order)

    dom = (DomainAxis(0.0, 2.0 * math.pi, True),)
    return Embedding(3, 1, dom, jet, name="ellipse")


def _helix(a: float, b: float) -> Embedding:
    c0 = math.hypot(a, b)

    def jet(params, order=3):
        p, _ = _as_batch(params, 1)
        phi = p[:, 0] / c0
        c, s = np.cos(phi), np.sin(phi)
        lead = np.full_like(c, b / c0)
        z = np.zeros_like(c)
        y = np.stack([a * c, a * s, b * phi], axis=1)
        d1 = np.stack([-a * s / c0, a * c / c0, lead], axis=1)
        d2 = np.stack([-a * c / c0**2, -a * s / c0**2, z], axis=1)
        d3 = np.stack([a * s / c0**3, -a * c / c0**3, z], axis=1)
        return _pack_curve(y, d1, d2, d3, order)

    dom = (DomainAxis(0.0, 2.0 * math.pi * c0, False),)
    return Embedding(3, 1, dom, jet, name="helix")


def _torus(big: float, small: float) -> Embedding:
    def jet(params, order=3):
        p, _ = _as_batch(params, 2)
        u, v = p[:, 0], p[:, 1]
        cu, su = np.cos(u), np.sin(u)
        cv, sv = np.cos(v), np.sin(v)
        r = big + small * cv
        z = np.zeros_like(u)
        y = np.stack([r * cu, r * su, small * sv], axis=1)
        if order < 1:
            return Jet(y=y)
        du = np.stack([-r * su, r * cu, z], axis=1)
        dv = np.stack([-small * sv * cu, -small * sv * su, small * cv], axis=1)
        dy = np.stack([du, dv], axis=1)
        if order < 2:
            return Jet(y=y, dy=dy)
        duu = np.stack([-r * cu, -r * su, z], axis=1)
        duv = np.stack([small * sv * su, -small * sv * cu, z], axis=1)
        dvv = np.stack([-small * cv * cu, -small * cv * su, -small * sv], axis=1)
        d2y = np.stack(
            [np.stack([duu, duv], axis=1), np.stack([duv, dvv], axis=1)], axis=1
        )
        if order < 3:
            return Jet(y=y, dy=dy, d2y=d2y)
        duuu = np.stack([r * su, -r * cu, z], axis=1)
        duuv = np.stack([small * sv * cu, small * sv * su, z], axis=1)
        duvv = np.stack([small * cv * su, -small * cv * cu, z], axis=1)
        dvvv = np.stack([small * sv * cu, small * sv * su, -small * cv], axis=1)
        d3y = _pack_sym3(duuu, duuv, duvv, dvvv)
        return Jet(y=y, dy=dy, d2y=d2y, d3y=d3y)

    dom = (
        DomainAxis(0.0, 2.0 * math.pi, True),
        DomainAxis(0.0, 2.0 * math.pi, True),
    )
    return Embedding(3, 2, dom, jet, name="torus")


def _sphere(radius: float) -> Embedding:
    def jet(params, order=3):
        p, _ = _as_batch(params, 2)
        th, ph = p[:, 0], p[:, 1]
        st, ct = np.sin(th), np.cos(th)
        sp, cp = np.sin(ph), np.cos(ph)
        z = np.zeros_like(th)
        y = radius * np.stack([st * cp, st * sp, ct], axis=1)
        if order < 1:
            return Jet(y=y)
        dt = radius * np.stack([ct * cp, ct * sp, -st], axis=1)
        dp = radius * np.stack([-st * sp, st * cp, z], axis=1)
        dy = np.stack([dt, dp], axis=1)
        if order < 2:
            return Jet(y=y, dy=dy)
        dtt = -y
        dtp = radius * np.stack([-ct * sp, ct * cp, z], axis=1)
        dpp = radius * np.stack([-st * cp, -st * sp, z], axis=1)
        d2y = np.stack(
            [np.stack([dtt, dtp], axis=1), np.stack([dtp, dpp], axis=1)], axis=1
        )
        if order < 3:
            return Jet(y=y, dy=dy, d2y=d2y)
        dttt = -dt
        dttp = -dp
        dtpp = radius * np.stack([-ct * cp, -ct * sp, z], axis=1)
        dppp = radius * np.stack([st * sp, -st * cp, z], axis=1)
        d3y = _pack_sym3(dttt, dttp, dtpp, dppp)
        return Jet(y=y, dy=dy, d2y=d2y, d3y=d3y)

    dom = (
        DomainAxis(0.0, math.pi, False),
        DomainAxis(0.0, 2.0 * math.pi, True),
    )
    return Embedding(3, 2, dom, jet, name="sphere")


def _flat_torus4(a: float) -> Embedding:
    def jet(params, order=3):
        p, _ = _as_batch(params, 2)
        u, v = p[:, 0], p[:, 1]
        cu, su = np.cos(u), np.sin(u)
        cv, sv = np.cos(v), np.sin(v)
        z = np.zeros_like(u)
        y = a * np.stack([cu, su, cv, sv], axis=1)
        if order < 1:
            return Jet(y=y)
        du = a * np.stack([-su, cu, z, z], axis=1)
        dv = a * np.stack([z, z, -sv, cv], axis=1)
        dy = np.stack([du, dv], axis=1)
        if order < 2:
            return Jet(y=y, dy=dy)
        duu = a * np.stack([-cu, -su, z, z], axis=1)
        duv = np.zeros_like(duu)
        dvv = a * np.stack([z, z, -cv, -sv], axis=1)
        d2y = np.stack(
            [np.stack([duu, duv], axis=1), np.stack([duv, dvv], axis=1)], axis=1
        )
        if order < 3:
            return Jet(y=y, dy=dy, d2y=d2y)
        duuu = a * np.stack([su, -cu, z, z], axis=1)
        dzero = np.zeros_like(duuu)
        dvvv = a * np.stack([z, z, sv, -cv], axis=1)
        d3y = _pack_sym3(duuu, dzero, dzero, dvvv)
        return Jet(y=y, dy=dy, d2y=d2y, d3y=d3y)

    dom = (
        DomainAxis(0.0, 2.0 * math.pi, True),
        DomainAxis(0.0, 2.0 * math.pi, True),
    )
    return Embedding(4, 2, dom, jet, name="flat_torus4")


def _pack_sym3(d000, d001, d011, d111) -> np.ndarray:
    """Assemble the symmetric (m, 2, 2, 2, n) third-derivative tensor."""
    row0 = np.stack(
        [np.stack([d000, d001], axis=1), np.stack([d001, d011], axis=1)], axis=1
    )
    row1 = np.stack(
        [np.stack([d001, d011], axis=1), np.stack([d011, d111], axis=1)], axis=1
    )
    return np.stack([row0, row1], axis=1)


def jets_fd(
    embedding: Embedding,
    params: np.ndarray,
    order: int = 3,
    h: Sequence[float] | None = None,
) -> Jet:
    """Numerical jets from the position map alone.

    Uses central differences once-Richardson-extrapolated (fourth-order
    accurate under step halving). Points must be interior to non-periodic
    axes by at least 2h; periodic axes wrap freely.
    """
    k = embedding.intrinsic_dim
    p, _ = _as_batch(params, k)
    if not 0 <= order <= 3:
        raise ValueError("order must be between 0 and 3")
    if h is None:
        steps = [ax.span / 400.0 for ax in embedding.domain]
    elif np.isscalar(h):
        steps = [float(h)] * k
    else:
        steps = [float(v) for v in h]
    for j, ax in enumerate(embedding.domain):
        if not ax.periodic:
            margin = 2.0 * steps[j]
            if np.any(p[:, j] < ax.lo + margin) or np.any(p[:, j] > ax.hi - margin):
                raise ValueError(
                    "params too close to a non-periodic domain edge for the stencil"
                )

    def pos(q):
        return embedding.jet(q, 0).y

    def diff(axes_seq, step_scale):
        """Composed central difference along axes_seq at scaled steps."""

        def rec(q, remaining):
            if not remaining:
                return pos(q)
            a = remaining[0]
            ha = steps[a] * step_scale
            qp = q.copy()
            qp[:, a] += ha
            qm = q.copy()
            qm[:, a] -= ha
            return (rec(qp, remaining[1:]) - rec(qm, remaining[1:])) / (2.0 * ha)

        return rec(p.copy(), list(axes_seq))

    def richardson(axes_seq):
        coarse = diff(axes_seq, 1.0)
        fine = diff(axes_seq, 0.5)
        return (4.0 * fine - coarse) / 3.0

    y = pos(p)
    n = embedding.ambient_dim
    m = p.shape[0]
    dy = d2y = d3y = None
    if order >= 1:
        dy = np.empty((m, k, n))
        for a in range(k):
            dy[:, a] = richardson((a,))
    if order >= 2:
        d2y = np.empty((m, k, k, n))
        for a in range(k):
            for b in range(a, k):
                val = richardson((a, b))
                d2y[:, a, b] = val
                d2y[:, b, a] = val
    if order >= 3:
        d3y = np.empty((m, k, k, k, n))
        done = {}
        for a in range(k):
            for b in range(k):
                for c in range(k):
                    key = tuple(sorted((a, b, c)))
                    if key not in done:
                        done[key] = richardson(key)
                    d3y[:, a, b, c] = done[key]
    return Jet(y=y, dy=dy, d2y=d2y, d3y=d3y)


def load_sampled_curve(path: str) -> Embedding:
    """Read a curve from CSV with header s,x,y,z (optionally s,x,y,z,w).

    Needs at least 16 rows with strictly increasing s. If the first and last
    points coincide (within 1e-8) the curve is closed and interpolated
    periodically. A quintic spline supplies the jets; cubic order was not
    accurate enough for second-derivative (curvature) targets at moderate
    sample counts.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [c.strip() for c in next(reader)]
        except StopIteration:
            raise ValueError("empty CSV file") from None
        rows = [r for r in reader if r and any(c.strip() for c in r)]
    if header not in (["s", "x", "y", "z"], ["s", "x", "y", "z", "w"]):
        raise ValueError("CSV header must be s,x,y,z or s,x,y,z,w")
    ncol = len(header)
    if len(rows) < 16:
        raise ValueError(f"need at least 16 samples, got {len(rows)}")
    if any(len(r) != ncol for r in rows):
        raise ValueError("CSV rows do not match the header column count")
    try:
        data = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise ValueError(f"malformed CSV row: {exc}") from None
    s = data[:, 0]
    pts = data[:, 1:]
    if np.any(np.diff(s) <= 0):
        raise ValueError("parameter column s must be strictly increasing")

    closed = bool(np.linalg.norm(pts[0] - pts[-1]) <= 1e-8)
    if closed:
        pts = pts.copy()
        pts[-1] = pts[0]
        spline = make_interp_spline(s, pts, k=5, bc_type="periodic")
        dom = (DomainAxis(float(s[0]), float(s[-1]), True),)
    else:
        spline = make_interp_spline(s, pts, k=5)
        dom = (DomainAxis(float(s[0]), float(s[-1]), False),)

    period = float(s[-1] - s[0])
    lo = float(s[0])
    n = ncol - 1

    def jet(params, order=3):
        p, _ = _as_batch(params, 1)
        t = p[:, 0]
        if closed:
            t = lo + np.mod(t - lo, period)
        y = spline(t)
        dy = spline(t, 1)[:, None, :] if order >= 1 else None
        d2y = spline(t, 2)[:, None, None, :] if order >= 2 else None
        d3y = spline(t, 3)[:, None, None, None, :] if order >= 3 else None
        return Jet(y=y, dy=dy, d2y=d2y, d3y=d3y)

    return Embedding(n, 1, dom, jet, name="sampled")
