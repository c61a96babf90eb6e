"""Thin-tube Dirichlet spectra and their squeezing limit.

This is the control experiment for the effective on-manifold Hamiltonian:
solve the ambient Laplacian on a hard-wall tube of half-width epsilon
around a curve, subtract the transverse well energy and extrapolate
epsilon to zero. The tube metric used here is the exact one induced by the
offset frame (no polynomial truncation), written in the rotated normal
gauge so the transverse coordinates do not twist along the curve.

Normal directions in which the curve is flat separate off exactly and are
dropped: a planar curve in E^3 is squeezed inside its plane (one
transverse well), a genuinely twisted curve gets the full square
cross-section (one well per normal direction).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .frames import build_frames, connection_coefficients, hashimoto_rotate
from .geometry import Embedding, SampleGrid, make_grid
from .operators import half_density_transform, laplace_beltrami
from .spectra import NumericalError, eigen_lowest
from .tubular import focal_radius

__all__ = [
    "SqueezeRun",
    "TubeSpectrum",
    "tube_dirichlet_spectrum",
    "run_squeeze",
    "squeeze_extrapolate",
]

FLAT_TOL = 1e-9


@dataclass(frozen=True)
class TubeSpectrum:
    """Ambient Dirichlet levels of one tube of half-width epsilon.

    eigenvalues holds the lowest levels of the full tube problem restricted
    to the non-flat normal directions. transverse is the continuum well
    energy n_active*(pi/(2 epsilon))^2; transverse_discrete is the ground
    energy of the matching discrete flat well, which is what the subtraction
    should remove so transverse discretization bias cancels.
    """

    epsilon: float
    eigenvalues: np.ndarray
    transverse: float
    transverse_discrete: float
    n_active: int


@dataclass(frozen=True)
class SqueezeRun:
    """A family of tube spectra over a decreasing epsilon schedule.

    raw[i, j] is level j at epsilons[i]; subtracted removes the discrete
    transverse ground energy. limits/slopes hold the Richardson value at
    epsilon -> 0 and the residual first-order coefficient once
    :func:`squeeze_extrapolate` has run; monotone flags record whether each
    level approached its limit monotonically.
    """

    epsilons: np.ndarray
    raw: np.ndarray
    transverse: np.ndarray
    transverse_discrete: np.ndarray
    subtracted: np.ndarray
    n_active: int
    limits: np.ndarray | None = None
    slopes: np.ndarray | None = None
    monotone: np.ndarray | None = None


def _dirichlet_well_ground(half_width: float, nodes: int) -> float:
    """Ground energy of the discrete flat well on [-w, w], cell-centered."""
    length = 2.0 * half_width
    h = length / nodes
    return (2.0 - 2.0 * math.cos(math.pi * h / length)) / h**2


def tube_dirichlet_spectrum(
    embedding: Embedding,
    epsilon: float,
    grid: "tuple[int, int] | list[int]",
    count: int = 4,
) -> TubeSpectrum:
    """Lowest ambient Dirichlet levels on the tube of half-width epsilon.

    grid gives (longitudinal nodes, transverse nodes per direction); at
    least 16 transverse nodes are required. epsilon must stay below the
    focal radius or the tube coordinates fold over. Only curves are
    supported; flat normal directions separate exactly and are excluded
    from both the solve and the reported transverse energies.
    """
    if embedding.intrinsic_dim != 1:
        raise NotImplementedError("tube squeezing is implemented for curves")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    grid = tuple(int(g) for g in grid)
    if len(grid) != 2:
        raise ValueError("grid must be (longitudinal nodes, transverse nodes)")
    n_long, n_trans = grid
    if n_trans < 16:
        raise ValueError("need at least 16 transverse nodes to resolve the well")

    base = make_grid(embedding, (n_long,))
    frames = build_frames(embedding, base)
    coeffs = connection_coefficients(embedding, frames)
    frames, coeffs = hashimoto_rotate(coeffs, frames)

    rho = focal_radius(coeffs)
    if epsilon >= rho:
        raise ValueError(
            f"epsilon {epsilon} reaches the focal radius {rho:.6g}; tube folds over"
        )

    d = frames.codim
    curv = coeffs.weingarten[:, :, 0, 0]  # (M, d) rotated-normal coefficients
    peak = max(1.0, float(np.max(np.abs(curv))))
    active = [a for a in range(d) if np.max(np.abs(curv[:, a])) > FLAT_TOL * peak]
    if not active:
        active = [0] if d >= 1 else []
    n_active = len(active)

    axes = list(base.axes)
    counts = [n_long]
    spacings = [base.spacings[0]]
    periodic = [base.periodic[0]]
    hq = 2.0 * epsilon / n_trans
    qaxis = -epsilon + hq * (np.arange(n_trans) + 0.5)
    for _ in active:
        axes.append(qaxis)
        counts.append(n_trans)
        spacings.append(hq)
        periodic.append(False)
    tube_grid = SampleGrid(
        counts=tuple(counts),
        spacings=tuple(spacings),
        axes=tuple(axes),
        periodic=tuple(periodic),
    )

    # exact longitudinal metric factor (1 + sum_a c_a(s) q_a)^2 on the nodes
    mesh = np.meshgrid(np.arange(n_long), *[qaxis] * n_active, indexing="ij")
    sidx = mesh[0].ravel()
    shear = np.ones(tube_grid.size)
    for pos, a in enumerate(active):
        shear += curv[sidx, a] * mesh[1 + pos].ravel()
    if np.any(shear <= 0.0):
        raise ValueError("tube metric degenerates inside the requested epsilon")
    g_long = frames.metric[sidx, 0, 0] * shear**2

    dim = 1 + n_active
    metric = np.zeros((tube_grid.size, dim, dim))
    metric[:, 0, 0] = g_long
    for j in range(1, dim):
        metric[:, j, j] = 1.0

    lap = laplace_beltrami(metric, tube_grid, "dirichlet")
    op = half_density_transform(replace(lap, matrix=-lap.matrix))

    well = (math.pi / (2.0 * epsilon)) ** 2
    well_disc = _dirichlet_well_ground(epsilon, n_trans)
    e_perp = n_active * well
    e_perp_disc = n_active * well_disc
    # the ground level sits near the transverse well energy, depressed at
    # most O(curvature^2); seeding the shift there keeps the sparse
    # eigensolver sharp even though the raw spectrum starts at ~(pi/2eps)^2
    peak_active = float(np.max(np.abs(curv[:, active]))) if active else 0.0
    hint = e_perp_disc - 1.0 - 0.5 * peak_active**2
    spec = eigen_lowest(op, count, sigma_hint=hint)
    ground = float(spec.eigenvalues[0])
    if not (0.5 * e_perp <= ground <= 2.0 * e_perp) and n_active > 0:
        raise NumericalError(
            "squeeze.tube_dirichlet_spectrum: ground level "
            f"{ground:.6g} outside the sanity bracket around {e_perp:.6g}"
        )
    return TubeSpectrum(
        epsilon=float(epsilon),
        eigenvalues=spec.eigenvalues,
        transverse=e_perp,
        transverse_discrete=e_perp_disc,
        n_active=n_active,
    )


def run_squeeze(
    embedding: Embedding,
    epsilons: "list[float] | np.ndarray",
    grid: "tuple[int, int] | list[int]",
    count: int = 4,
) -> SqueezeRun:
    """Tube spectra over a decreasing epsilon schedule, ready to extrapolate."""
    eps = np.asarray(list(epsilons), dtype=float)
    _check_schedule(eps)
    specs = [tube_dirichlet_spectrum(embedding, e, grid, count) for e in eps]
    n_active = specs[0].n_active
    raw = np.stack([s.eigenvalues for s in specs])
    transverse = np.array([s.transverse for s in specs])
    tdisc = np.array([s.transverse_discrete for s in specs])
    subtracted = raw - tdisc[:, None]
    return SqueezeRun(
        epsilons=eps,
        raw=raw,
        transverse=transverse,
        transverse_discrete=tdisc,
        subtracted=subtracted,
        n_active=n_active,
    )


def _check_schedule(eps: np.ndarray) -> None:
    if eps.size < 3:
        raise ValueError("need at least 3 epsilons for extrapolation")
    if np.any(eps <= 0):
        raise ValueError("epsilons must be positive")
    if np.any(np.diff(eps) >= 0):
        raise ValueError("epsilons must be strictly decreasing")
    ratios = eps[1:] / eps[:-1]
    if np.max(np.abs(ratios - ratios[0])) > 1e-6:
        raise ValueError("epsilons must form a geometric progression")


def squeeze_extrapolate(run: SqueezeRun) -> SqueezeRun:
    """Polynomial Richardson extrapolation of the subtracted levels to
    epsilon = 0.

    Fits the interpolating polynomial in epsilon through all samples per
    level; the constant term is the limit and the linear term the residual
    slope. Levels that do not approach their limit monotonically are
    refused: their limit and slope are reported as NaN, the monotone flag
    is cleared, and a RuntimeWarning points at the raw data instead.
    """
    eps = run.epsilons
    _check_schedule(eps)
    nlev = run.subtracted.shape[1]
    limits = np.empty(nlev)
    slopes = np.empty(nlev)
    monotone = np.empty(nlev, dtype=bool)
    for j in range(nlev):
        vals = run.subtracted[:, j]
        diffs = np.diff(vals)
        tol = 1e-12 * max(1.0, float(np.max(np.abs(vals))))
        monotone[j] = bool(np.all(diffs >= -tol) or np.all(diffs <= tol))
        if not monotone[j]:
            limits[j] = np.nan
            slopes[j] = np.nan
            warnings.warn(
                f"squeeze level {j} is not monotone in epsilon; "
                "extrapolation refused, inspect the raw values",
                RuntimeWarning,
                stacklevel=2,
            )
            continue
        coeff = np.polyfit(eps, vals, deg=len(eps) - 1)
        limits[j] = coeff[-1]
        slopes[j] = coeff[-2]
    return replace(run, limits=limits, slopes=slopes, monotone=monotone)
