"""Orthonormal moving frames along an embedded curve or surface.

A frame field couples the coordinate tangents (unnormalized, so the induced
metric keeps its coordinate form) with an orthonormal normal frame. The
connection coefficients split into three blocks: the Weingarten (shape) block
mixing normals into tangents, the second fundamental form mixing tangents
into normals, and the normal-bundle connection. For codimension two the
normal connection can be rotated away pointwise; :func:`hashimoto_rotate`
performs that gauge change and reports the holonomy left over on closed
parameter lines.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .geometry import Embedding, Jet, SampleGrid

__all__ = [
    "FrameField",
    "ConnectionCoefficients",
    "CurvatureData",
    "build_frames",
    "connection_coefficients",
    "hashimoto_rotate",
    "curvature_data",
]

ORTHONORMALITY_TOL = 1e-10


@dataclass(frozen=True)
class FrameField:
    """Frame data at every grid node.

    tangent (M, k, n) holds the coordinate tangent vectors, normal (M, d, n)
    the orthonormal normal frame, metric/metric_inv/metric_det the induced
    metric data. normal_derivative (M, k, d, n), when present, carries the
    analytic parameter derivatives of the normal vectors; it is None when the
    normals were propagated discretely. rotation_angle and holonomy are
    populated by the normal-gauge rotation.
    """

    grid: SampleGrid
    jet: Jet
    tangent: np.ndarray
    normal: np.ndarray
    metric: np.ndarray
    metric_inv: np.ndarray
    metric_det: np.ndarray
    normal_derivative: np.ndarray | None = None
    rotation_angle: np.ndarray | None = None
    holonomy: float | None = None

    @property
    def intrinsic_dim(self) -> int:
        return self.tangent.shape[1]

    @property
    def codim(self) -> int:
        return self.normal.shape[1]

    @property
    def ambient_dim(self) -> int:
        return self.tangent.shape[2]


@dataclass(frozen=True)
class ConnectionCoefficients:
    """Frame derivative coefficients at every grid node.

    weingarten[m, a, i, j]: tangential part of the a-th normal's j-derivative
    against the dual tangent frame (mixed-index shape block).
    second_form[m, a, i, j]: normal part of the tangent derivatives,
    symmetric in (i, j).
    normal_connection[m, j, a, b]: normal-bundle connection, antisymmetric
    in (a, b). Index m runs over grid nodes in C order.
    """

    grid: SampleGrid
    weingarten: np.ndarray
    second_form: np.ndarray
    normal_connection: np.ndarray


@dataclass(frozen=True)
class CurvatureData:
    """Pointwise curvature summaries.

    kind is "curve", "surface3" or "surface4". Curves fill kappa, tau (in
    E^3) and the complex curvature kappa_c whose modulus equals kappa and
    whose phase accumulates the torsion integral. Surfaces in E^3 fill
    mean_h and gauss_k; surfaces in E^4 fill the per-normal mean curvatures
    h_components and their complex combination h_complex.
    """

    kind: str
    kappa: np.ndarray | None = None
    tau: np.ndarray | None = None
    kappa_c: np.ndarray | None = None
    mean_h: np.ndarray | None = None
    gauss_k: np.ndarray | None = None
    h_components: np.ndarray | None = None
    h_complex: np.ndarray | None = None


def build_frames(embedding: Embedding, grid: SampleGrid) -> FrameField:
    """Evaluate tangents and an orthonormal normal frame on the grid.

    Normal frame choice by (intrinsic, ambient) dimension:
      - curves in E^2: the left-rotated unit tangent;
      - curves in E^3: unit curvature normal and its cross completion
        (requires nonvanishing curvature);
      - surfaces in E^3: minus the normalized tangent cross product, which
        points toward the center of curvature for spheres and tube tori;
      - surfaces in E^4: Gram-Schmidt completion seeded from ambient axes
        and propagated node to node for branch continuity.
    The first three are algebraic in the jets, so their parameter
    derivatives are returned as well.
    """
    k, n = embedding.intrinsic_dim, embedding.ambient_dim
    jet = embedding.jet(grid.nodes(), 3)
    tangent = jet.dy
    metric = np.einsum("min,mjn->mij", tangent, tangent)
    det = np.linalg.det(metric)
    if np.any(det <= 0.0) or not np.all(np.isfinite(det)):
        raise ValueError("degenerate induced metric: map is not an immersion on the grid")
    metric_inv = np.linalg.inv(metric)

    if k == 1 and n == 2:
        normal, nd = _plane_curve_normals(jet, metric)
    elif k == 1 and n == 3:
        normal, nd = _space_curve_normals(jet, metric)
    elif k == 2 and n == 3:
        normal, nd = _surface3_normals(jet)
    elif k == 2 and n == 4:
        normal, nd = _propagated_normals(grid, tangent, metric_inv)
    else:
        raise ValueError(f"unsupported dimensions: intrinsic {k}, ambient {n}")

    return FrameField(
        grid=grid,
        jet=jet,
        tangent=tangent,
        normal=normal,
        metric=metric,
        metric_inv=metric_inv,
        metric_det=det,
        normal_derivative=nd,
    )


def _plane_curve_normals(jet: Jet, metric: np.ndarray):
    d1 = jet.dy[:, 0, :]
    speed = np.sqrt(metric[:, 0, 0])
    that = d1 / speed[:, None]
    normal = np.stack([-that[:, 1], that[:, 0]], axis=1)[:, None, :]
    # signed curvature against the left normal; n' = -v*kappa_s*t
    d2 = jet.d2y[:, 0, 0, :]
    kappa_s = (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / speed**3
    nd = (-(speed * kappa_s))[:, None] * that
    return normal, nd[:, None, None, :]


def _space_curve_normals(jet: Jet, metric: np.ndarray):
    d1 = jet.dy[:, 0, :]
    d2 = jet.d2y[:, 0, 0, :]
    d3 = jet.d3y[:, 0, 0, 0, :]
    speed = np.sqrt(metric[:, 0, 0])
    that = d1 / speed[:, None]
    cross = np.cross(d1, d2)
    cross_norm = np.linalg.norm(cross, axis=1)
    kappa = cross_norm / speed**3
    if np.any(kappa * np.max(speed) < 1e-10):
        raise ValueError(
            "curvature vanishes on the grid; curvature-normal frame undefined"
        )
    nvec = d2 - (np.einsum("mn,mn->m", d2, that))[:, None] * that
    nhat = nvec / np.linalg.norm(nvec, axis=1)[:, None]
    bhat = np.cross(that, nhat)
    tau = np.einsum("mn,mn->m", cross, d3) / cross_norm**2
    normal = np.stack([nhat, bhat], axis=1)
    # Frenet-Serret scaled by the parametrization speed
    dn = speed[:, None] * (-kappa[:, None] * that + tau[:, None] * bhat)
    db = speed[:, None] * (-tau[:, None] * nhat)
    nd = np.stack([dn, db], axis=1)[:, None, :, :]
    return normal, nd


def _surface3_normals(jet: Jet):
    e1 = jet.dy[:, 0, :]
    e2 = jet.dy[:, 1, :]
    w = np.cross(e1, e2)
    wnorm = np.linalg.norm(w, axis=1)
    normal = -(w / wnorm[:, None])
    # dw along each parameter, then normalize through the quotient rule
    nd = np.empty((w.shape[0], 2, 1, 3))
    for axis in range(2):
        dw = np.cross(jet.d2y[:, axis, 0, :], e2) + np.cross(e1, jet.d2y[:, axis, 1, :])
        proj = np.einsum("mn,mn->m", w, dw) / wnorm**2
        dnhat = -(dw - proj[:, None] * w) / wnorm[:, None]
        nd[:, axis, 0, :] = dnhat
    return normal[:, None, :], nd


def _propagated_normals(grid: SampleGrid, tangent: np.ndarray, metric_inv: np.ndarray):
    """Seeded Gram-Schmidt normals, branch-continuous along the grid."""
    m, k, n = tangent.shape
    d = n - k
    co_tangent = np.einsum("mij,mjn->min", metric_inv, tangent)

    def project_out(vecs, idx):
        coeff = np.einsum("vn,in->vi", vecs, co_tangent[idx])
        return vecs - np.einsum("vi,in->vn", coeff, tangent[idx])

    # seed: ambient axes with the largest residual after tangent projection
    eye = np.eye(n)
    resid = project_out(eye, 0)
    norms = np.linalg.norm(resid, axis=1)
    order = np.argsort(-norms)
    picked = [i for i in order if norms[i] > 1e-6][:d]
    if len(picked) < d:
        raise ValueError("could not seed a normal frame from ambient axes")
    frame = _gram_schmidt(resid[picked])

    shape = grid.counts
    normal = np.empty((m, d, n))
    flat_index = np.arange(m).reshape(shape)
    prev = {}
    for multi in np.ndindex(*shape):
        idx = int(flat_index[multi])
        if all(c == 0 for c in multi):
            seed = frame
        else:
            # reference the neighbor one step back along the last varying axis
            ref_multi = list(multi)
            for axis in reversed(range(len(multi))):
                if multi[axis] > 0:
                    ref_multi[axis] -= 1
                    break
            seed = prev[tuple(ref_multi)]
        vecs = project_out(seed, idx)
        frame_here = _gram_schmidt(vecs)
        normal[idx] = frame_here
        prev[multi] = frame_here
    return normal, None


def _gram_schmidt(vecs: np.ndarray) -> np.ndarray:
    out = np.array(vecs, dtype=float, copy=True)
    for i in range(out.shape[0]):
        for j in range(i):
            out[i] -= np.dot(out[i], out[j]) * out[j]
        norm = np.linalg.norm(out[i])
        if norm < 1e-12:
            raise ValueError("normal frame degenerated during propagation")
        out[i] /= norm
    return out


def connection_coefficients(
    embedding: Embedding, frames: FrameField
) -> ConnectionCoefficients:
    """Split the frame derivatives into Weingarten, second-form and
    normal-connection blocks.

    The tangential blocks come from the jets alone (orthogonality trades the
    normal derivative for a second-derivative pairing). The normal-normal
    block uses the analytic normal derivatives when the frame construction
    supplied them, otherwise centered differences along grid lines,
    antisymmetrized to restore the exact pairing symmetry.
    """
    jet = frames.jet
    second = np.einsum("mijn,man->maij", jet.d2y, frames.normal)
    weingarten = -np.einsum("mil,malj->maij", frames.metric_inv, second)

    k = frames.intrinsic_dim
    d = frames.codim
    mcount = frames.tangent.shape[0]
    if d < 2:
        normal_conn = np.zeros((mcount, k, d, d))
    elif frames.normal_derivative is not None:
        normal_conn = np.einsum(
            "mjan,mbn->mjab", frames.normal_derivative, frames.normal
        )
    else:
        normal_conn = _fd_normal_connection(frames)
    return ConnectionCoefficients(
        grid=frames.grid,
        weingarten=weingarten,
        second_form=second,
        normal_connection=normal_conn,
    )


def _fd_normal_connection(frames: FrameField) -> np.ndarray:
    grid = frames.grid
    k = frames.intrinsic_dim
    d = frames.codim
    shape = grid.counts
    normal = frames.normal.reshape(shape + (d, frames.ambient_dim))
    out = np.empty(shape + (k, d, d))
    for axis in range(k):
        h = grid.spacings[axis]
        if grid.periodic[axis]:
            fwd = np.roll(normal, -1, axis=axis)
            bwd = np.roll(normal, 1, axis=axis)
            dn = (fwd - bwd) / (2.0 * h)
        else:
            dn = np.gradient(normal, h, axis=axis, edge_order=2)
        pair = np.einsum("...an,...bn->...ab", dn, normal)
        out[..., axis, :, :] = 0.5 * (pair - np.swapaxes(pair, -1, -2))
    return out.reshape(-1, k, d, d)


def hashimoto_rotate(
    coeffs: ConnectionCoefficients, frames: FrameField
) -> tuple[FrameField, ConnectionCoefficients]:
    """Rotate a codimension-two normal frame so its connection vanishes.

    The rotation angle is the cumulative trapezoid integral of the normal
    connection along grid lines (axis 0 first, then axis 1 row by row). The
    elimination is exact for the rotated frame by the gauge transformation
    law; the residual returned in the new coefficients is floating-point
    noise. On closed parameter lines the angle need not return to its start;
    the accumulated mismatch is reported as `holonomy` on the frame rather
    than hidden.

    Codimension one passes through unchanged with a zero angle.
    """
    d = frames.codim
    grid = frames.grid
    if d == 1:
        zero = np.zeros(frames.tangent.shape[0])
        new_frames = replace(frames, rotation_angle=zero, holonomy=None)
        return new_frames, coeffs
    if d != 2:
        raise ValueError("normal-gauge rotation implemented for codimension 1 and 2")

    gamma = coeffs.normal_connection[:, :, 0, 1]  # (M, k)
    k = frames.intrinsic_dim
    shape = grid.counts
    if k == 1:
        g0 = gamma[:, 0]
        theta = _cumtrapz(g0, grid.spacings[0])
        holonomy = _loop_integral(g0, grid.spacings[0]) if grid.periodic[0] else None
        curl = 0.0
    else:
        g0 = gamma[:, 0].reshape(shape)
        g1 = gamma[:, 1].reshape(shape)
        along0 = np.apply_along_axis(_cumtrapz, 0, g0, grid.spacings[0])
        along1 = np.apply_along_axis(_cumtrapz, 1, g1, grid.spacings[1])
        theta_a = along0[:, :1] + along1
        theta_b = along1[:1, :] + along0
        curl = float(np.max(np.abs(theta_a - theta_b)))
        theta = theta_a.ravel()
        holonomy = None
        if grid.periodic[0]:
            holonomy = _loop_integral(g0[:, 0], grid.spacings[0])
    scale = max(1.0, float(np.max(np.abs(theta))))
    if k == 2 and curl > 1e-8 * scale:
        import warnings

        warnings.warn(
            "normal connection is not curl-free; rotation is path dependent "
            f"(mixed-path mismatch {curl:.3e})",
            RuntimeWarning,
            stacklevel=2,
        )

    ct = np.cos(theta)[:, None]
    st = np.sin(theta)[:, None]
    n1, n2 = frames.normal[:, 0, :], frames.normal[:, 1, :]
    new_normal = np.stack([ct * n1 - st * n2, st * n1 + ct * n2], axis=1)

    nd = frames.normal_derivative
    new_nd = None
    if nd is not None:
        new_nd = np.empty_like(nd)
        for axis in range(k):
            dth = gamma[:, axis][:, None]  # exact derivative of the angle
            dn1, dn2 = nd[:, axis, 0, :], nd[:, axis, 1, :]
            new_nd[:, axis, 0, :] = (
                -dth * st * n1 + ct * dn1 - dth * ct * n2 - st * dn2
            )
            new_nd[:, axis, 1, :] = (
                dth * ct * n1 + st * dn1 - dth * st * n2 + ct * dn2
            )

    new_frames = replace(
        frames,
        normal=new_normal,
        normal_derivative=new_nd,
        rotation_angle=theta,
        holonomy=holonomy,
    )

    rot = np.stack(
        [np.concatenate([ct, -st], axis=1), np.concatenate([st, ct], axis=1)], axis=1
    )  # (M, 2, 2), rows are the new normals in the old basis
    new_second = np.einsum("mab,mbij->maij", rot, coeffs.second_form)
    new_wein = np.einsum("mab,mbij->maij", rot, coeffs.weingarten)
    if new_nd is not None:
        new_conn = np.einsum("mjan,mbn->mjab", new_nd, new_normal)
    else:
        # gauge law: the rotated connection is the old one minus the exact
        # angle gradient, which is the integrand itself
        new_conn = np.zeros_like(coeffs.normal_connection)
    new_coeffs = ConnectionCoefficients(
        grid=grid,
        weingarten=new_wein,
        second_form=new_second,
        normal_connection=new_conn,
    )
    return new_frames, new_coeffs


def _cumtrapz(values: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(values)
    out[0] = 0.0
    np.cumsum(0.5 * h * (values[1:] + values[:-1]), out=out[1:])
    return out


def _loop_integral(values: np.ndarray, h: float) -> float:
    closed = np.append(values, values[0])
    return float(np.trapezoid(closed, dx=h))


def curvature_data(
    embedding: Embedding, frames: FrameField, coeffs: ConnectionCoefficients
) -> CurvatureData:
    """Reduce the connection coefficients to scalar curvature fields.

    For curves the complex curvature pairs the two normal components of the
    curvature vector in the rotated (connection-free) frame, so its modulus
    is the classical curvature and its phase carries the accumulated
    torsion integral. Surfaces report mean and Gauss curvature in E^3 and
    the per-normal mean curvatures in E^4.
    """
    k = frames.intrinsic_dim
    n = frames.ambient_dim
    if k == 1:
        g = frames.metric[:, 0, 0]
        comp = coeffs.second_form[:, :, 0, 0] / g[:, None]
        if n == 2:
            kap = comp[:, 0]
            return CurvatureData(
                kind="curve",
                kappa=np.abs(kap),
                tau=None,
                kappa_c=kap.astype(complex),
            )
        kappa_c = comp[:, 0] + 1j * comp[:, 1]
        tau = _torsion(frames)
        return CurvatureData(
            kind="curve", kappa=np.abs(kappa_c), tau=tau, kappa_c=kappa_c
        )
    if n == 3:
        shape_op = -coeffs.weingarten[:, 0]
        mean_h = 0.5 * np.trace(shape_op, axis1=1, axis2=2)
        gauss_k = np.linalg.det(shape_op)
        return CurvatureData(kind="surface3", mean_h=mean_h, gauss_k=gauss_k)
    hcomp = -0.5 * np.trace(coeffs.weingarten, axis1=2, axis2=3)
    return CurvatureData(
        kind="surface4",
        h_components=hcomp,
        h_complex=hcomp[:, 0] + 1j * hcomp[:, 1],
    )


def _torsion(frames: FrameField) -> np.ndarray:
    jet = frames.jet
    d1 = jet.dy[:, 0, :]
    d2 = jet.d2y[:, 0, 0, :]
    d3 = jet.d3y[:, 0, 0, 0, :]
    cross = np.cross(d1, d2)
    denom = np.einsum("mn,mn->m", cross, cross)
    return np.einsum("mn,mn->m", cross, d3) / denom


def orthonormality_residual(frames: FrameField) -> float:
    """Largest deviation of the frame from the mixed orthonormality relations."""
    tn = np.einsum("min,man->mia", frames.tangent, frames.normal)
    nn = np.einsum("man,mbn->mab", frames.normal, frames.normal)
    eye = np.eye(frames.codim)
    return float(
        max(np.max(np.abs(tn)), np.max(np.abs(nn - eye)))
    )
