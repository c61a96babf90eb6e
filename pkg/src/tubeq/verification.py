"""Self-contained invariant checks runnable from the command line.

Each check builds a small configuration, measures one identity the
construction must satisfy (frame orthonormality, gauge flatness, potential
identities, discrete self-adjointness, exact separability of a straight
tube, extrapolation exactness) and compares the measured residual against
a fixed bound. The battery is meant as a quick health probe on an
installed copy, not as a replacement for the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .frames import (
    build_frames,
    connection_coefficients,
    curvature_data,
    hashimoto_rotate,
    orthonormality_residual,
)
from .geometry import DomainAxis, Embedding, Jet, catalog_shape, make_grid
from .operators import (
    half_density_transform,
    laplace_beltrami,
    momentum_operator,
    submanifold_hamiltonian,
)
from .spectra import eigen_lowest
from .squeeze import SqueezeRun, squeeze_extrapolate, tube_dirichlet_spectrum
from .tubular import effective_potential, tube_metric

__all__ = ["CheckResult", "available_checks", "run_checks"]


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one named invariant check."""

    name: str
    passed: bool
    value: float
    bound: float
    detail: str = ""


def _result(name: str, value: float, bound: float, detail: str = "") -> CheckResult:
    return CheckResult(
        name=name, passed=bool(value <= bound), value=float(value), bound=float(bound),
        detail=detail,
    )


def _helix_pipeline():
    emb = catalog_shape("helix", (3.0, 4.0))
    grid = make_grid(emb, (160,))
    frames = build_frames(emb, grid)
    coeffs = connection_coefficients(emb, frames)
    return emb, grid, frames, coeffs


def _check_frame_orthonormality() -> CheckResult:
    _, _, frames, _ = _helix_pipeline()
    return _result(
        "frame_orthonormality",
        orthonormality_residual(frames),
        1e-10,
        "helix normal frame Gram matrix vs identity",
    )


def _check_connection_antisymmetry() -> CheckResult:
    _, _, _, coeffs = _helix_pipeline()
    defect = float(
        np.max(np.abs(coeffs.normal_connection + np.swapaxes(coeffs.normal_connection, -1, -2)))
    )
    return _result(
        "connection_antisymmetry", defect, 1e-12, "normal-bundle connection skewness"
    )


def _check_rotation_flattens_connection() -> CheckResult:
    _, _, frames, coeffs = _helix_pipeline()
    _, rotated = hashimoto_rotate(coeffs, frames)
    defect = float(np.max(np.abs(rotated.normal_connection)))
    return _result(
        "rotation_flattens_connection",
        defect,
        1e-8,
        "normal connection after the gauge rotation",
    )


def _check_curvature_magnitude() -> CheckResult:
    emb, _, frames, coeffs = _helix_pipeline()
    frames, coeffs = hashimoto_rotate(coeffs, frames)
    curv = curvature_data(emb, frames, coeffs)
    defect = float(np.max(np.abs(np.abs(curv.kappa_c) - curv.kappa)))
    return _result(
        "curvature_magnitude",
        defect,
        1e-9,
        "|complex curvature| vs scalar curvature on the helix",
    )


def _check_circle_curvature() -> CheckResult:
    emb = catalog_shape("circle", (2.0,))
    grid = make_grid(emb, (128,))
    frames = build_frames(emb, grid)
    coeffs = connection_coefficients(emb, frames)
    curv = curvature_data(emb, frames, coeffs)
    defect = float(np.max(np.abs(curv.kappa - 0.5)))
    return _result("circle_curvature", defect, 1e-10, "radius-2 circle, kappa = 1/2")


def _check_sphere_flat_potential() -> CheckResult:
    emb = catalog_shape("sphere", (1.5,))
    grid = make_grid(emb, (24, 48))
    frames = build_frames(emb, grid)
    coeffs = connection_coefficients(emb, frames)
    value = float(np.max(np.abs(effective_potential(coeffs, frames))))
    return _result(
        "sphere_flat_potential", value, 1e-10, "squeezing potential vanishes on spheres"
    )


def _check_torus_potential_identity() -> CheckResult:
    emb = catalog_shape("torus", (2.0, 1.0))
    grid = make_grid(emb, (24, 48))
    frames = build_frames(emb, grid)
    coeffs = connection_coefficients(emb, frames)
    pot = effective_potential(coeffs, frames)
    curv = curvature_data(emb, frames, coeffs)
    defect = float(np.max(np.abs(pot + curv.mean_h**2 - curv.gauss_k)))
    return _result(
        "torus_potential_identity",
        defect,
        1e-9,
        "V + H^2 - K = 0 pointwise on the tube torus",
    )


def _check_tube_determinant_expansion() -> CheckResult:
    emb = catalog_shape("torus", (2.0, 1.0))
    grid = make_grid(emb, (24, 48))
    frames = build_frames(emb, grid)
    coeffs = connection_coefficients(emb, frames)
    tm = tube_metric(emb, frames, coeffs)
    curv = curvature_data(emb, frames, coeffs)
    q = 1e-3
    got = tm.det_factor(np.array([q]))
    want = (1.0 - 2.0 * curv.mean_h * q + curv.gauss_k * q * q) ** 2
    defect = float(np.max(np.abs(got - want) / np.abs(want)))
    return _result(
        "tube_determinant_expansion",
        defect,
        1e-6,
        "offset determinant vs mean/Gauss curvature form",
    )


def _check_laplacian_self_adjoint() -> CheckResult:
    emb = catalog_shape("ellipse", (1.5, 0.7))
    grid = make_grid(emb, (160,))
    frames = build_frames(emb, grid)
    lap = laplace_beltrami(frames.metric, grid, "periodic")
    mat = lap.dense()
    wa = lap.weight[:, None] * mat
    scale = max(1.0, float(np.max(np.abs(wa))))
    raw_defect = float(np.max(np.abs(wa - wa.T))) / scale
    hd = half_density_transform(lap).dense()
    hd_defect = float(np.max(np.abs(hd - hd.T))) / max(1.0, float(np.max(np.abs(hd))))
    return _result(
        "laplacian_self_adjoint",
        max(raw_defect, hd_defect * 100.0),
        1e-10,
        "weighted symmetry of the flux Laplacian on an ellipse",
    )


def _check_momentum_self_adjoint() -> CheckResult:
    emb = catalog_shape("circle", (1.0,))
    grid = make_grid(emb, (128,))
    s = grid.axes[0]
    g = (1.3 + 0.4 * np.sin(s) + 0.15 * np.cos(2 * s)).reshape(-1, 1, 1)
    mom = momentum_operator(0, g, grid, "periodic")
    mat = mom.dense()
    wa = mom.weight[:, None] * mat
    defect = float(np.max(np.abs(wa - wa.conj().T))) / max(1.0, float(np.max(np.abs(wa))))
    return _result(
        "momentum_self_adjoint",
        defect,
        1e-12,
        "weighted hermiticity of the half-density momentum",
    )


def _check_circle_ground_level() -> CheckResult:
    emb = catalog_shape("circle", (1.0,))
    grid = make_grid(emb, (256,))
    ham = submanifold_hamiltonian(emb, grid)
    spec = eigen_lowest(ham, 3)
    ground = abs(spec.eigenvalues[0] + 0.25)
    h = grid.spacings[0]
    pair_exact = (2.0 - 2.0 * math.cos(h)) / h**2 - 0.25
    pair = max(abs(spec.eigenvalues[1] - pair_exact), abs(spec.eigenvalues[2] - pair_exact))
    return _result(
        "circle_ground_level",
        max(ground, pair),
        1e-9,
        "unit circle levels vs exact discrete values",
    )


def _straight_segment(length: float = math.pi) -> Embedding:
    axis = DomainAxis(0.0, length, periodic=False)

    def jet(params: np.ndarray, order: int = 3) -> Jet:
        s = np.asarray(params, dtype=float).reshape(-1)
        m = s.shape[0]
        y = np.stack([s, np.zeros(m)], axis=-1)
        dy = np.zeros((m, 1, 2))
        dy[:, 0, 0] = 1.0
        return Jet(y=y, dy=dy, d2y=np.zeros((m, 1, 1, 2)), d3y=np.zeros((m, 1, 1, 1, 2)))

    return Embedding(
        ambient_dim=2, intrinsic_dim=1, domain=(axis,), jet=jet, name="segment"
    )


def _check_straight_tube_separability() -> CheckResult:
    length = math.pi
    eps = 0.1
    n_s, n_q = 64, 16
    spec = tube_dirichlet_spectrum(_straight_segment(length), eps, (n_s, n_q), count=1)
    h_s = length / n_s
    long_ground = (2.0 - 2.0 * math.cos(math.pi * h_s / length)) / h_s**2
    expect = spec.transverse_discrete + long_ground
    defect = abs(float(spec.eigenvalues[0]) - expect) / expect
    return _result(
        "straight_tube_separability",
        defect,
        1e-8,
        "flat tube splits into well plus longitudinal box exactly",
    )


def _check_extrapolation_exact() -> CheckResult:
    eps = np.array([0.2, 0.1, 0.05])
    vals = (-0.25 + 0.3 * eps).reshape(-1, 1)
    run = SqueezeRun(
        epsilons=eps,
        raw=vals.copy(),
        transverse=np.zeros(3),
        transverse_discrete=np.zeros(3),
        subtracted=vals,
        n_active=1,
    )
    out = squeeze_extrapolate(run)
    defect = abs(out.limits[0] + 0.25) + abs(out.slopes[0] - 0.3)
    return _result(
        "extrapolation_exact",
        defect,
        1e-12,
        "polynomial limit of synthetic linear data",
    )


_CHECKS = {
    "frame_orthonormality": _check_frame_orthonormality,
    "connection_antisymmetry": _check_connection_antisymmetry,
    "rotation_flattens_connection": _check_rotation_flattens_connection,
    "curvature_magnitude": _check_curvature_magnitude,
    "circle_curvature": _check_circle_curvature,
    "sphere_flat_potential": _check_sphere_flat_potential,
    "torus_potential_identity": _check_torus_potential_identity,
    "tube_determinant_expansion": _check_tube_determinant_expansion,
    "laplacian_self_adjoint": _check_laplacian_self_adjoint,
    "momentum_self_adjoint": _check_momentum_self_adjoint,
    "circle_ground_level": _check_circle_ground_level,
    "straight_tube_separability": _check_straight_tube_separability,
    "extrapolation_exact": _check_extrapolation_exact,
}


def available_checks() -> tuple[str, ...]:
    return tuple(_CHECKS)


def run_checks(names: "list[str] | None" = None) -> list[CheckResult]:
    """Run the named checks (all by default) and return their results."""
    if names is None:
        names = list(_CHECKS)
    results = []
    for name in names:
        if name not in _CHECKS:
            raise ValueError(f"unknown check '{name}'")
        results.append(_CHECKS[name]())
    return results
