"""Tubular neighborhood geometry: frames and metric at normal offsets.

Points near the submanifold are coordinatized as base point plus normal
offset q. The tangential frame vectors at offset q are linear in q through
the Weingarten block, so the pulled-back metric is an exact quadratic
polynomial in q and its determinant expands in traces of the shape
operators. The zeroth-order quantum residue of squeezing a wavefunction
onto the submanifold is the effective potential returned here.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .frames import ConnectionCoefficients, FrameField
from .geometry import Embedding, SampleGrid

__all__ = [
    "TubeMetric",
    "tube_frame",
    "tube_metric",
    "effective_potential",
    "focal_radius",
]


@dataclass(frozen=True)
class TubeMetric:
    """Tangential tube metric as a polynomial in the normal offset q.

    g(q) = base + linear[a]*q_a + quadratic[a,b]*q_a*q_b, all (k, k) blocks
    per node. det_linear and det_quadratic are the Taylor coefficients of
    det g(q)/det g(0) through second order:
    det factor = 1 + det_linear[a]*q_a + det_quadratic[a,b]*q_a*q_b + O(q^3).
    """

    grid: SampleGrid
    base: np.ndarray
    linear: np.ndarray
    quadratic: np.ndarray
    det_base: np.ndarray
    det_linear: np.ndarray
    det_quadratic: np.ndarray

    def _offsets(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        m = self.base.shape[0]
        d = self.linear.shape[1]
        if q.shape == (d,):
            return np.broadcast_to(q, (m, d))
        if q.shape == (m, d):
            return q
        raise ValueError(f"offset must have shape ({d},) or ({m}, {d})")

    def evaluate(self, q: np.ndarray) -> np.ndarray:
        """Exact tangential metric at offset q (shape (d,) or (M, d))."""
        qb = self._offsets(q)
        lin = np.einsum("maij,ma->mij", self.linear, qb)
        quad = np.einsum("mabij,ma,mb->mij", self.quadratic, qb, qb)
        return self.base + lin + quad

    def det_factor(self, q: np.ndarray) -> np.ndarray:
        """Quadratic truncation of det g(q)/det g(0)."""
        qb = self._offsets(q)
        return (
            1.0
            + np.einsum("ma,ma->m", self.det_linear, qb)
            + np.einsum("mab,ma,mb->m", self.det_quadratic, qb, qb)
        )


def tube_frame(
    embedding: Embedding,
    frames: FrameField,
    coeffs: ConnectionCoefficients,
    q: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Frame vectors at normal offset q.

    The tangential vectors pick up the Weingarten shear,
    E_j = e_j + q_a W[a]^i_j e_i, while the normal vectors ride along
    unchanged. Offsets beyond the focal radius make the frame degenerate;
    that raises, and approaching it (80%) warns. Expects a rotated
    (connection-free) normal frame in codimension two, otherwise the
    normal offsets themselves would twist.
    """
    q = np.asarray(q, dtype=float)
    m, k, n = frames.tangent.shape
    d = frames.codim
    if q.shape == (d,):
        qb = np.broadcast_to(q, (m, d))
    elif q.shape == (m, d):
        qb = q
    else:
        raise ValueError(f"offset must have shape ({d},) or ({m}, {d})")

    shear = np.einsum("ma,maij->mij", qb, coeffs.weingarten)
    tangential = frames.tangent + np.einsum("mij,min->mjn", shear, frames.tangent)

    mixed = np.eye(k)[None, :, :] + shear
    # determinants alone miss an even number of sign flips, so test the
    # (real) eigenvalues of the shear map directly
    if np.any(np.linalg.eigvals(mixed).real <= 0.0):
        raise ValueError("normal offset crosses the focal set: tube frame degenerate")
    rho = focal_radius(coeffs)
    qmag = np.linalg.norm(qb, axis=1)
    if np.any(qmag > 0.8 * rho):
        warnings.warn(
            "normal offset exceeds 80% of the focal radius; tube coordinates "
            "are close to degenerate",
            RuntimeWarning,
            stacklevel=2,
        )
    return tangential, frames.normal.copy()


def tube_metric(
    embedding: Embedding, frames: FrameField, coeffs: ConnectionCoefficients
) -> TubeMetric:
    """Tangential tube metric coefficients and determinant expansion.

    The metric is exactly quadratic in q:
      linear[a] = W[a]^T g + g W[a],
      quadratic[a,b] = W[a]^T g W[b] symmetrized in (a, b).
    The determinant factor through second order uses shape-operator traces:
      det_linear[a] = 2 tr W[a],
      det_quadratic[ab] = 2 tr W[a] tr W[b] - tr(W[a] W[b]).
    """
    g = frames.metric
    w = coeffs.weingarten
    wt_g = np.einsum("maki,mkj->maij", w, g)
    linear = wt_g + np.swapaxes(wt_g, -1, -2)
    quad = np.einsum("maki,mkl,mblj->mabij", w, g, w)
    quad = 0.5 * (quad + np.swapaxes(quad, 1, 2))

    tr = np.einsum("maii->ma", w)
    trprod = np.einsum("maij,mbji->mab", w, w)
    det_lin = 2.0 * tr
    det_quad = 2.0 * np.einsum("ma,mb->mab", tr, tr) - trprod

    return TubeMetric(
        grid=frames.grid,
        base=g,
        linear=linear,
        quadratic=quad,
        det_base=frames.metric_det,
        det_linear=det_lin,
        det_quadratic=det_quad,
    )


def effective_potential(
    coeffs: ConnectionCoefficients, frames: FrameField
) -> np.ndarray:
    """Curvature-induced potential from squeezing onto the submanifold.

    V = 1/4 sum_a (tr W[a])^2 - 1/2 sum_a tr(W[a]^2) over the shape
    operators W[a]. For a curve this is minus a quarter of the squared
    curvature; for a surface in E^3 it is -(H^2 - K); it is never positive
    in those cases. The expression is invariant under normal-frame
    rotations, so it may be evaluated in any normal gauge.
    """
    w = coeffs.weingarten
    tr = np.einsum("maii->ma", w)
    tr_sq = np.einsum("maij,maji->ma", w, w)
    return 0.25 * np.sum(tr**2, axis=1) - 0.5 * np.sum(tr_sq, axis=1)


def focal_radius(coeffs: ConnectionCoefficients) -> float:
    """Distance to the nearest focal point over the whole grid.

    Reciprocal of the largest shape-operator eigenvalue magnitude; offsets
    must stay strictly inside this radius for tube coordinates to stay
    regular. Infinite for a totally geodesic (flat) submanifold.
    """
    w = coeffs.weingarten
    eigs = np.linalg.eigvals(w.reshape(-1, w.shape[-2], w.shape[-1]))
    peak = float(np.max(np.abs(eigs))) if eigs.size else 0.0
    if peak == 0.0:
        return float("inf")
    return 1.0 / peak
