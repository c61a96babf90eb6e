"""Lowest eigenpairs of the discrete operators.

Dense operators go through LAPACK directly: plain symmetric solve in the
half-density gauge, generalized symmetric solve against the diagonal weight
in the raw gauge. Sparse operators use block Lanczos with full
reorthogonalization on the shift-inverted matrix; the shift sits below the
Gershgorin lower bound of the spectrum so the lowest levels dominate, and
the block keeps degenerate multiplets intact. Both paths check residuals
before returning.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .operators import DiscreteOperator

__all__ = [
    "NumericalError",
    "Spectrum",
    "eigen_lowest",
    "weighted_inner_product",
]

RESIDUAL_TOL = 1e-8
DEGENERACY_RTOL = 1e-8
LANCZOS_SEED = 20240811


class NumericalError(RuntimeError):
    """A solver failed to reach its tolerance; message names the operation."""


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues (ascending) and gauge-orthonormal eigenvectors.

    eigenvectors[:, j] belongs to eigenvalues[j] and is normalized in the
    gauge's inner product including the cell volume. residuals holds
    ||A v - lambda v|| / ||v|| per returned pair.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    gauge: str
    weight: np.ndarray
    grid: object
    residuals: np.ndarray


def weighted_inner_product(u: np.ndarray, v: np.ndarray, op: DiscreteOperator):
    """Inner product of node vectors in the operator's gauge.

    Raw gauge weighs by sqrt(det g) times the cell volume; half-density
    gauge by the cell volume alone. Conjugation acts on the first slot.
    """
    u = np.asarray(u)
    v = np.asarray(v)
    cell = op.grid.cell_volume()
    if op.gauge == "raw":
        total = np.sum(np.conjugate(u) * v * op.weight) * cell
    else:
        total = np.sum(np.conjugate(u) * v) * cell
    if np.iscomplexobj(u) or np.iscomplexobj(v):
        return complex(total)
    return float(total)


def _symmetry_defect(mat) -> float:
    if sp.issparse(mat):
        d = (mat - mat.conjugate().T).tocoo()
        return float(np.max(np.abs(d.data))) if d.nnz else 0.0
    return float(np.max(np.abs(mat - mat.conj().T)))


def _matrix_scale(mat) -> float:
    if sp.issparse(mat):
        mat = mat.tocoo()
        peak = float(np.max(np.abs(mat.data))) if mat.nnz else 1.0
    else:
        peak = float(np.max(np.abs(mat)))
    return peak if peak > 0 else 1.0


def _gershgorin_lower(mat) -> float:
    """Row-sum lower bound on the spectrum of a self-adjoint matrix."""
    if sp.issparse(mat):
        mat = mat.tocsr()
        diag = mat.diagonal().real
        absrow = np.asarray(np.abs(mat).sum(axis=1)).ravel()
    else:
        diag = np.diag(mat).real
        absrow = np.sum(np.abs(mat), axis=1)
    return float(np.min(diag - (absrow - np.abs(diag))))


def eigen_lowest(
    op: DiscreteOperator, count: int, sigma_hint: float | None = None
) -> Spectrum:
    """The `count` lowest eigenpairs of a self-adjoint discrete operator.

    Rejects matrices that are not self-adjoint in their gauge. Within
    degenerate clusters the pairs are reordered by the dominant Fourier
    index of the eigenvector along each grid axis, which pins down an
    otherwise arbitrary solver rotation and keeps output reproducible.
    sigma_hint, when given, is a caller-supplied lower bound near the
    bottom of the spectrum that seeds the sparse shift-invert solver; a
    wrong hint costs extra refinement rounds but not correctness.
    """
    m = op.size
    if not 1 <= count <= m:
        raise ValueError("count must be between 1 and the node count")

    if op.gauge == "half_density":
        defect = _symmetry_defect(op.matrix)
        if defect > 1e-9 * _matrix_scale(op.matrix):
            raise ValueError(
                "matrix is not symmetric in the half-density gauge "
                f"(defect {defect:.3e})"
            )
        if op.is_sparse:
            evals, evecs = _block_lanczos_lowest(op.matrix, count, sigma_hint)
        else:
            evals, evecs = la.eigh(op.matrix)
            evals, evecs = evals[:count], evecs[:, :count]
    elif op.gauge == "raw":
        w = op.weight
        if op.is_sparse:
            u = np.sqrt(w)
            sym = sp.diags(u) @ op.matrix @ sp.diags(1.0 / u)
            sym = (0.5 * (sym + sym.conjugate().T)).tocsr()
            evals, vecs = _block_lanczos_lowest(sym, count, sigma_hint)
            evecs = vecs / u[:, None]
        else:
            wa = w[:, None] * op.matrix
            defect = _symmetry_defect(wa)
            if defect > 1e-8 * _matrix_scale(wa):
                raise ValueError(
                    "matrix is not weighted-self-adjoint in the raw gauge "
                    f"(defect {defect:.3e})"
                )
            wa = 0.5 * (wa + wa.conj().T)
            evals, evecs = la.eigh(wa, np.diag(w).astype(wa.dtype))
            evals, evecs = evals[:count], evecs[:, :count]
    else:
        raise ValueError(f"unknown gauge {op.gauge!r}")

    evals = np.asarray(evals, dtype=float)
    order = np.argsort(evals, kind="stable")
    evals = evals[order]
    evecs = evecs[:, order]
    evecs = _stabilize_degenerate(evals, evecs, op)

    residuals = np.empty(count)
    for j in range(count):
        av = op.matrix @ evecs[:, j]
        residuals[j] = float(
            np.linalg.norm(av - evals[j] * evecs[:, j]) / np.linalg.norm(evecs[:, j])
        )
        if residuals[j] > RESIDUAL_TOL * max(1.0, abs(evals[j])):
            raise NumericalError(
                "spectra.eigen_lowest: eigenpair residual above tolerance "
                f"(level {j}, residual {residuals[j]:.3e})"
            )

    evecs = np.array(evecs, copy=True)
    for j in range(count):
        nrm = weighted_inner_product(evecs[:, j], evecs[:, j], op)
        evecs[:, j] = evecs[:, j] / np.sqrt(abs(nrm))

    return Spectrum(
        eigenvalues=evals,
        eigenvectors=evecs,
        gauge=op.gauge,
        weight=op.weight,
        grid=op.grid,
        residuals=residuals,
    )


def _block_lanczos_lowest(mat: sp.spmatrix, count: int, sigma_hint: float | None = None):
    """Lowest eigenpairs by shift-inverted block Lanczos, adaptive shift.

    The first round shifts one unit below the Gershgorin bound (or to the
    caller's hint), which is certified below the spectrum but may separate
    the bottom levels poorly. Each round runs a short full-reorthogonalized
    block sweep, then moves the shift just under the current lowest Ritz
    value and warm-starts from the Ritz vectors, which sharpens the
    separation of the inverted spectrum by orders of magnitude. A shift
    that lands above an eigenvalue is detected (the Ritz bottom drops below
    it, since such modes dominate the inverse) and backed off, so a bad
    hint degrades speed, never correctness. Rayleigh-Ritz runs against the
    original matrix, so residuals are honest.
    """
    m = mat.shape[0]
    rng = np.random.default_rng(LANCZOS_SEED)
    width = min(m, max(min(count, 6), 2))
    floor = _gershgorin_lower(mat) - 1.0
    sigma = floor if sigma_hint is None else max(float(sigma_hint), floor)
    scale = _matrix_scale(mat)
    block = _orthonormal_columns(rng.standard_normal((m, width)))

    theta = None
    for _ in range(10):
        lu, sigma = _factor_shifted(mat, sigma, scale)
        theta, vecs, ok = _lanczos_sweep(mat, lu, block, rng, count, width, budget=14)
        if theta is None:
            break
        if ok and theta[0] >= sigma:
            return theta[:count], vecs[:, :count]
        top = theta[min(count, len(theta)) - 1]
        spread = max(top - theta[0], 1e-3 * max(1.0, abs(theta[0])))
        if theta[0] < sigma:
            # certified overshoot: an eigenvalue sits below the shift
            sigma = max(floor, theta[0] - 0.01 * spread)
        else:
            step = min(0.01 * spread, 0.5 * (theta[0] - sigma))
            if step <= 1e-14 * max(1.0, abs(theta[0])):
                step = 1e-6 * max(1.0, abs(theta[0]))
            sigma = max(floor, theta[0] - step)
        # carry a cushion of extra Ritz directions so partially converged
        # members of a degenerate multiplet survive the restart
        block = vecs
    raise NumericalError(
        "spectra.eigen_lowest: Lanczos failed to converge "
        f"(last shift {sigma:.6g})"
    )


def _factor_shifted(mat: sp.spmatrix, sigma: float, scale: float):
    """LU-factor (A - sigma I), nudging the shift off exact singularities."""
    m = mat.shape[0]
    for attempt in range(4):
        shifted = (mat - sigma * sp.identity(m, format="csr", dtype=mat.dtype)).tocsc()
        try:
            return spla.splu(shifted), sigma
        except RuntimeError as exc:
            if attempt == 3:
                raise NumericalError(
                    f"spectra.eigen_lowest: sparse factorization failed ({exc})"
                ) from exc
            sigma -= max(1e-10 * scale, 1e-10) * 10.0**attempt
    raise NumericalError("spectra.eigen_lowest: sparse factorization failed")


def _lanczos_sweep(mat, lu, start, rng, count: int, width: int, budget: int):
    """One block-Lanczos round on a fixed factorization.

    Returns (ritz values, ritz vectors, converged) with `width` extra
    cushion levels beyond `count`, so the caller can warm-start the next
    round without truncating degenerate multiplets. Stops early when the
    residual gate passes on the requested levels or the worst residual
    stops improving (the caller then moves the shift). Two
    reorthogonalization passes per step keep the basis orthonormal.
    """
    basis = _orthonormal_columns(start)
    block = basis[:, -width:]
    best = (None, None, np.inf)
    prev_resid = np.inf
    stall = 0
    for step in range(1, budget + 1):
        work = lu.solve(block)
        work -= basis @ (basis.conj().T @ work)
        work -= basis @ (basis.conj().T @ work)
        block, _ = _qr_with_restart(work, basis, rng)
        basis = np.concatenate([basis, block], axis=1)
        if step % 2 == 0 or step == budget:
            theta, vecs, resid = _rayleigh_ritz(mat, basis, count, extra=width)
            if theta is None:
                continue
            worst = float(np.max(resid / np.maximum(1.0, np.abs(theta[:count]))))
            if worst <= 0.5 * RESIDUAL_TOL:
                return theta, vecs, True
            if worst < best[2]:
                best = (theta, vecs, worst)
            stall = stall + 1 if worst > 0.7 * prev_resid else 0
            prev_resid = worst
            if stall >= 2:
                break
    return best[0], best[1], False


def _orthonormal_columns(x: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(x)
    return q


def _qr_with_restart(work: np.ndarray, basis: np.ndarray, rng) -> tuple[np.ndarray, int]:
    """Orthonormalize a block, refreshing columns that lost rank."""
    m, b = work.shape
    q, r = np.linalg.qr(work)
    good = np.abs(np.diag(r)) > 1e-12 * max(1.0, np.abs(r).max())
    rank = int(np.sum(good))
    if rank < b:
        fresh = rng.standard_normal((m, b - rank))
        if basis.shape[1]:
            fresh -= basis @ (basis.conj().T @ fresh)
        fresh -= q[:, :rank] @ (q[:, :rank].conj().T @ fresh)
        q = np.concatenate([q[:, :rank], _orthonormal_columns(fresh)], axis=1)
    return q, rank


def _rayleigh_ritz(mat, basis, count, extra=0):
    """Ritz data of `mat` on the basis: values, vectors, residual norms.

    Returns count + extra lowest Ritz pairs (residuals only for the first
    count, which is what convergence is judged on), or Nones when the
    basis is still too small.
    """
    if basis.shape[1] < count:
        return None, None, None
    amat = mat @ basis
    proj = basis.conj().T @ amat
    proj = 0.5 * (proj + proj.conj().T)
    theta, s = la.eigh(proj)
    take = min(basis.shape[1], count + extra)
    vecs = basis @ s[:, :take]
    avecs = amat @ s[:, :count]
    resid = np.empty(count)
    for j in range(count):
        nv = np.linalg.norm(vecs[:, j])
        resid[j] = np.linalg.norm(avecs[:, j] - theta[j] * vecs[:, j]) / nv
    return theta[:take], vecs, resid


def _stabilize_degenerate(evals, evecs, op) -> np.ndarray:
    """Reorder eigenvectors inside degenerate clusters deterministically."""
    counts = getattr(op.grid, "counts", None)
    if counts is None:
        return evecs
    scale = max(1.0, float(np.max(np.abs(evals))))
    n = len(evals)
    j = 0
    out = np.array(evecs, copy=True)
    while j < n:
        jend = j + 1
        while jend < n and abs(evals[jend] - evals[j]) <= DEGENERACY_RTOL * scale:
            jend += 1
        if jend - j > 1:
            keys = [_fourier_key(out[:, col], counts) for col in range(j, jend)]
            sub = sorted(range(jend - j), key=lambda t: keys[t])
            out[:, j:jend] = out[:, j:jend][:, sub]
        j = jend
    return out


def _fourier_key(vec: np.ndarray, counts) -> tuple:
    """Dominant folded Fourier index per axis, for stable degenerate order."""
    field = vec.reshape(counts)
    key = []
    for axis in range(len(counts)):
        spec = np.abs(np.fft.fft(field, axis=axis))
        other = tuple(i for i in range(len(counts)) if i != axis)
        mag = spec.sum(axis=other) if other else spec
        idx = int(np.argmax(mag))
        n = counts[axis]
        key.append(min(idx, n - idx))
    return tuple(key)
