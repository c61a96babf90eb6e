"""Adapted frames, connection coefficients, gauge rotation, curvature data."""

import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import pipeline, planar_circle_e3, rotated_pipeline, wobbly_closed_curve_e3
from tubeq.frames import (
    build_frames,
    connection_coefficients,
    curvature_data,
    hashimoto_rotate,
    orthonormality_residual,
)
from tubeq.geometry import catalog_shape, make_grid

CATALOG_CASES = [
    ("circle", (1.0,), (64,)),
    ("ellipse", (1.5, 0.7), (64,)),
    ("helix", (3.0, 4.0), (64,)),
    ("sphere", (2.0,), (16, 24)),
    ("torus", (2.0, 1.0), (16, 24)),
    ("flat_torus4", (1.2,), (12, 12)),
]


@pytest.mark.parametrize("name,params,counts", CATALOG_CASES)
def test_frame_orthonormality(name, params, counts):
    _, _, fr, _ = pipeline(name, params, counts)
    assert orthonormality_residual(fr) <= 1e-10


def test_orthonormality_residual_detects_defects():
    _, _, fr, _ = pipeline("helix", (3.0, 4.0), (64,))
    bad = dataclasses.replace(fr, normal=1.01 * fr.normal)
    assert orthonormality_residual(bad) > 1e-3


@pytest.mark.parametrize("name,params,counts", CATALOG_CASES)
def test_induced_metric_from_tangents(name, params, counts):
    emb, grid, fr, _ = pipeline(name, params, counts)
    dy = emb.jet(grid.nodes(), order=1).dy
    gram = np.einsum("mia,mja->mij", dy, dy)
    assert np.allclose(fr.metric, gram, atol=1e-12)
    assert fr.metric_det.min() > 0.0
    assert np.allclose(np.einsum("mij,mjk->mik", fr.metric, fr.metric_inv),
                       np.eye(grid.ndim)[None], atol=1e-10)


@pytest.mark.parametrize("name,params,counts", CATALOG_CASES)
def test_connection_antisymmetry(name, params, counts):
    _, _, _, co = pipeline(name, params, counts)
    nc = co.normal_connection
    assert np.abs(nc + nc.swapaxes(-1, -2)).max() <= 1e-9


@pytest.mark.parametrize("name,params,counts", CATALOG_CASES)
def test_second_form_weingarten_relation(name, params, counts):
    _, _, fr, co = pipeline(name, params, counts)
    # gamma_(a)alpha beta = -g_alpha gamma W_(a)gamma beta
    expected = -np.einsum("mbg,magj->mabj", fr.metric, co.weingarten)
    assert np.abs(co.second_form - expected).max() <= 1e-9
    sym = co.second_form - co.second_form.swapaxes(-1, -2)
    assert np.abs(sym).max() <= 1e-9


def test_circle_frame_and_sign_convention():
    emb, grid, fr, co = pipeline("circle", (1.0,), (64,))
    s = grid.axes[0]
    zero = np.zeros_like(s)
    tangent = np.stack([-np.sin(s), np.cos(s), zero], axis=-1)
    assert np.abs(fr.tangent[:, 0, :] - tangent).max() <= 1e-12
    # first normal points at the center, second spans the flat direction
    inward = np.stack([-np.cos(s), -np.sin(s), zero], axis=-1)
    assert np.abs(fr.normal[:, 0, :] - inward).max() <= 1e-12
    assert np.abs(np.abs(fr.normal[:, 1, 2]) - 1.0).max() <= 1e-12
    # curvature coefficients (-1, 0): all bending along the inward normal
    assert np.abs(co.weingarten[:, 0, 0, 0] + 1.0).max() <= 1e-12
    assert np.abs(co.weingarten[:, 1, 0, 0]).max() <= 1e-12
    # a closed planar loop accumulates no normal-frame holonomy
    fr2, _ = hashimoto_rotate(co, fr)
    assert fr2.holonomy == 0.0


def test_circle_radius_scaling():
    _, _, _, co = pipeline("circle", (2.0,), (64,))
    assert np.abs(np.abs(co.weingarten[:, 0, 0, 0]) - 0.5).max() <= 1e-12


def test_sphere_umbilic_weingarten():
    for radius in (1.0, 2.0):
        emb, grid, fr, co = pipeline("sphere", (radius,), (16, 24))
        w = co.weingarten[:, 0]
        eigs = np.linalg.eigvals(w)
        assert np.abs(np.abs(eigs) - 1.0 / radius).max() <= 1e-9
        # umbilic: both principal curvatures equal
        assert np.abs(eigs - eigs[:, :1]).max() <= 1e-9
        # radial normal at the equator node closest to (pi/2, 0)
        nodes = grid.nodes()
        idx = np.argmin((nodes[:, 0] - np.pi / 2) ** 2 + nodes[:, 1] ** 2)
        radial = emb.jet(nodes[idx], order=0).y[0] / radius
        dot = fr.normal[idx, 0] @ radial
        assert abs(abs(dot) - 1.0) <= 1e-10


def test_sphere_curvature_scalars():
    emb, grid, fr, co = pipeline("sphere", (2.0,), (16, 24))
    cd = curvature_data(emb, fr, co)
    assert cd.kind == "surface3"
    assert np.abs(cd.mean_h - 0.5).max() <= 1e-10
    assert np.abs(cd.gauss_k - 0.25).max() <= 1e-10


def test_torus_principal_curvatures_outer_equator():
    emb, grid, fr, co = pipeline("torus", (2.0, 1.0), (16, 24))
    cd = curvature_data(emb, fr, co)
    nodes = grid.nodes()
    idx = np.argmin(np.abs(nodes[:, 1]))  # v = 0: outer equator
    w = co.weingarten[idx, 0]
    eigs = np.sort(np.abs(np.linalg.eigvals(w)))
    assert np.allclose(eigs, [1.0 / 3.0, 1.0], atol=1e-9)
    assert abs(cd.mean_h[idx] ** 2 - cd.gauss_k[idx] - 1.0 / 9.0) <= 1e-9
    # deviation from umbilicity is a nonnegative scalar everywhere
    assert (cd.mean_h**2 - cd.gauss_k).min() >= -1e-12


def test_flat_torus4_mean_curvature_components():
    a = 1.2
    emb, grid, fr, co = pipeline("flat_torus4", (a,), (12, 12))
    cd = curvature_data(emb, fr, co)
    assert cd.kind == "surface4"
    expected = -1.0 / (2.0 * a)
    assert np.abs(cd.h_components - expected).max() <= 1e-10
    recombined = cd.h_components[:, 0] + 1j * cd.h_components[:, 1]
    assert np.abs(cd.h_complex - recombined).max() <= 1e-12


def test_helix_connection_is_torsion_before_rotation():
    _, _, _, co = pipeline("helix", (3.0, 4.0), (96,))
    # rate 4/25 = 0.16 for pitch-4 radius-3
    assert abs(np.abs(co.normal_connection).max() - 0.16) <= 1e-12


def test_rotation_flattens_connection():
    for name, params, counts in [("helix", (3.0, 4.0), (96,)), ("flat_torus4", (1.2,), (12, 12))]:
        _, _, _, co2 = rotated_pipeline(name, params, counts)
        assert np.abs(co2.normal_connection).max() <= 1e-8


def test_rotation_preserves_curvature_magnitude():
    _, _, fr, co = pipeline("helix", (3.0, 4.0), (96,))
    fr2, co2 = hashimoto_rotate(co, fr)
    pre = np.linalg.norm(co.weingarten[:, :, 0, 0], axis=1)
    post = np.linalg.norm(co2.weingarten[:, :, 0, 0], axis=1)
    assert np.abs(pre - post).max() <= 1e-9
    assert np.abs(pre - 0.12).max() <= 1e-9


def test_helix_curvature_data():
    emb, grid, fr, co = pipeline("helix", (3.0, 4.0), (96,))
    cd = curvature_data(emb, fr, co)
    assert cd.kind == "curve"
    assert np.abs(cd.kappa - 0.12).max() <= 1e-9
    assert np.abs(cd.tau - 0.16).max() <= 1e-9
    assert np.abs(np.abs(cd.kappa_c) - cd.kappa).max() <= 1e-9
    # torsion-adapted normals keep the complex curvature constant
    assert np.abs(cd.kappa_c - 0.12).max() <= 1e-12


def test_helix_parallel_frame_curvature_winds():
    emb, grid, fr2, co2 = rotated_pipeline("helix", (3.0, 4.0), (96,))
    cd = curvature_data(emb, fr2, co2)
    # in the connection-free frame the complex curvature rotates at the
    # torsion rate; the phase integral carries an O(h^2) quadrature error
    s = grid.axes[0]
    expected = 0.12 * np.exp(1j * 0.16 * s)
    err_pos = np.abs(cd.kappa_c - expected).max()
    err_neg = np.abs(cd.kappa_c - np.conj(expected)).max()
    assert min(err_pos, err_neg) <= 1e-2
    assert np.abs(np.abs(cd.kappa_c) - 0.12).max() <= 1e-9


def test_circle_complex_curvature_constant():
    emb, grid, fr, co = pipeline("circle", (1.0,), (64,))
    cd = curvature_data(emb, fr, co)
    assert np.abs(cd.kappa - 1.0).max() <= 1e-10
    assert np.abs(cd.tau).max() <= 1e-10
    assert np.abs(cd.kappa_c - 1.0).max() <= 1e-10


@pytest.mark.parametrize("make_emb", [lambda: catalog_shape("helix", (3.0, 4.0)),
                                      wobbly_closed_curve_e3])
def test_cross_product_curvature_oracle(make_emb):
    emb = make_emb()
    grid = make_grid(emb, (128,))
    fr = build_frames(emb, grid)
    co = connection_coefficients(emb, fr)
    cd = curvature_data(emb, fr, co)
    jet = emb.jet(grid.nodes(), order=2)
    dy = jet.dy[:, 0, :]
    d2y = jet.d2y[:, 0, 0, :]
    cross = np.cross(dy, d2y)
    speed = np.linalg.norm(dy, axis=-1)
    kappa_ref = np.linalg.norm(cross, axis=-1) / speed**3
    assert np.abs(cd.kappa - kappa_ref).max() <= 1e-7


def test_planar_curve_needs_no_rotation():
    emb = planar_circle_e3()
    grid = make_grid(emb, (128,))
    fr = build_frames(emb, grid)
    co = connection_coefficients(emb, fr)
    assert np.abs(co.normal_connection).max() <= 1e-12
    fr2, co2 = hashimoto_rotate(co, fr)
    assert np.array_equal(fr2.normal, fr.normal)
    assert fr2.holonomy == 0.0


def test_holonomy_closed_curves(tmp_path):
    # symmetric wobble: pointwise torsion is large but integrates to zero
    emb = wobbly_closed_curve_e3()
    grid = make_grid(emb, (256,))
    fr = build_frames(emb, grid)
    co = connection_coefficients(emb, fr)
    assert np.abs(co.normal_connection).max() > 0.5
    fr2, _ = hashimoto_rotate(co, fr)
    assert fr2.holonomy is not None
    loop = np.sum(co.normal_connection[:, 0, 0, 1]) * grid.spacings[0]
    assert abs(fr2.holonomy - loop) <= 1e-10
    assert abs(fr2.holonomy) <= 1e-10

    # open curve: no loop to integrate over
    emb_open = catalog_shape("helix", (3.0, 4.0))
    grid_open = make_grid(emb_open, (96,))
    fr_open = build_frames(emb_open, grid_open)
    fr3, _ = hashimoto_rotate(connection_coefficients(emb_open, fr_open), fr_open)
    assert fr3.holonomy is None


def test_holonomy_sampled_trefoil(tmp_path):
    t = np.linspace(0.0, 2.0 * np.pi, 1025)
    x = (2.0 + np.cos(3 * t)) * np.cos(2 * t)
    y = (2.0 + np.cos(3 * t)) * np.sin(2 * t)
    z = np.sin(3 * t)
    rows = ["s,x,y,z"] + [f"{a:.17g},{b:.17g},{c:.17g},{d:.17g}" for a, b, c, d in zip(t, x, y, z)]
    path = tmp_path / "trefoil.csv"
    path.write_text("\n".join(rows) + "\n")
    from tubeq.geometry import load_sampled_curve

    emb = load_sampled_curve(path)
    assert emb.domain[0].periodic
    grid = make_grid(emb, (512,))
    fr = build_frames(emb, grid)
    co = connection_coefficients(emb, fr)
    fr2, co2 = hashimoto_rotate(co, fr)
    assert fr2.holonomy is not None
    assert abs(fr2.holonomy + 15.5934) <= 0.05
    assert np.abs(co2.normal_connection).max() <= 1e-8


def _rotate_normals(fr, angle):
    rot = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    normal = np.einsum("de,men->mdn", rot, fr.normal)
    nd = fr.normal_derivative
    if nd is not None:
        nd = np.einsum("de,mken->mkdn", rot, nd)
    return dataclasses.replace(fr, normal=normal, normal_derivative=nd)


@settings(max_examples=12, deadline=None)
@given(angle=st.floats(min_value=0.0, max_value=2.0 * np.pi, allow_nan=False))
def test_constant_gauge_rotation_invariance_curve(angle):
    emb = catalog_shape("helix", (3.0, 4.0))
    grid = make_grid(emb, (48,))
    fr = build_frames(emb, grid)
    co = connection_coefficients(emb, fr)
    cd = curvature_data(emb, fr, co)
    fr_r = _rotate_normals(fr, angle)
    co_r = connection_coefficients(emb, fr_r)
    cd_r = curvature_data(emb, fr_r, co_r)
    assert np.abs(np.abs(cd_r.kappa_c) - np.abs(cd.kappa_c)).max() <= 1e-9
    assert np.abs(cd_r.kappa - cd.kappa).max() <= 1e-9
    trace_sq = (co.weingarten.trace(axis1=-2, axis2=-1) ** 2).sum(axis=1)
    trace_sq_r = (co_r.weingarten.trace(axis1=-2, axis2=-1) ** 2).sum(axis=1)
    assert np.abs(trace_sq - trace_sq_r).max() <= 1e-9


@settings(max_examples=12, deadline=None)
@given(angle=st.floats(min_value=0.0, max_value=2.0 * np.pi, allow_nan=False))
def test_constant_gauge_rotation_invariance_surface4(angle):
    emb = catalog_shape("flat_torus4", (1.2,))
    grid = make_grid(emb, (8, 8))
    fr = build_frames(emb, grid)
    cd = curvature_data(emb, fr, connection_coefficients(emb, fr))
    fr_r = _rotate_normals(fr, angle)
    cd_r = curvature_data(emb, fr_r, connection_coefficients(emb, fr_r))
    norm = np.hypot(cd.h_components[:, 0], cd.h_components[:, 1])
    norm_r = np.hypot(cd_r.h_components[:, 0], cd_r.h_components[:, 1])
    assert np.abs(norm - norm_r).max() <= 1e-9


def test_weingarten_matches_fd_jets():
    emb = catalog_shape("torus", (2.0, 1.0))
    grid = make_grid(emb, (16, 24))
    fr = build_frames(emb, grid)
    co = connection_coefficients(emb, fr)

    from tubeq.geometry import Embedding, jets_fd

    emb_fd = Embedding(
        ambient_dim=emb.ambient_dim,
        intrinsic_dim=emb.intrinsic_dim,
        domain=emb.domain,
        jet=lambda params, order=3: jets_fd(emb, params, order=order, h=0.01),
        name="torus_fd",
    )
    fr_fd = build_frames(emb_fd, grid)
    co_fd = connection_coefficients(emb_fd, fr_fd)
    assert np.abs(co.weingarten - co_fd.weingarten).max() <= 1e-6


def test_degenerate_metric_rejected():
    from tubeq.geometry import DomainAxis, Embedding, Jet

    def jet(params, order=3):
        pts = np.atleast_2d(np.asarray(params, dtype=float))
        m = pts.shape[0]
        y = np.zeros((m, 2))
        dy = np.zeros((m, 1, 2))  # constant map: not an immersion
        d2y = np.zeros((m, 1, 1, 2)) if order >= 2 else None
        d3y = np.zeros((m, 1, 1, 1, 2)) if order >= 3 else None
        return Jet(y=y, dy=dy, d2y=d2y, d3y=d3y)

    emb = Embedding(ambient_dim=2, intrinsic_dim=1,
                    domain=(DomainAxis(0.0, 1.0, periodic=True),), jet=jet, name="flatline")
    grid = make_grid(emb, (16,))
    with pytest.raises(ValueError, match="immersion"):
        build_frames(emb, grid)
