"""Quantum mechanics constrained to embedded curves and surfaces.

The package builds moving frames and connection data for an embedding,
rotates the normal gauge flat, expands the metric of a tubular
neighborhood, assembles self-adjoint half-density operators with the
curvature-induced effective potential, and checks the construction
against an independent thin-tube Dirichlet squeezing limit.

Submodule attributes are loaded lazily so that the command line front end
can cap BLAS threads before numpy is first imported.
"""

from __future__ import annotations

import importlib

__version__ = "0.1.0"

_EXPORTS = {
    # geometry
    "CATALOG": "geometry",
    "DomainAxis": "geometry",
    "Jet": "geometry",
    "Embedding": "geometry",
    "SampleGrid": "geometry",
    "make_grid": "geometry",
    "catalog_shape": "geometry",
    "jets_fd": "geometry",
    "load_sampled_curve": "geometry",
    # frames
    "FrameField": "frames",
    "ConnectionCoefficients": "frames",
    "CurvatureData": "frames",
    "build_frames": "frames",
    "connection_coefficients": "frames",
    "hashimoto_rotate": "frames",
    "curvature_data": "frames",
    "orthonormality_residual": "frames",
    # tubular
    "TubeMetric": "tubular",
    "tube_frame": "tubular",
    "tube_metric": "tubular",
    "effective_potential": "tubular",
    "focal_radius": "tubular",
    # operators
    "DiscreteOperator": "operators",
    "laplace_beltrami": "operators",
    "half_density_transform": "operators",
    "momentum_operator": "operators",
    "adjoint": "operators",
    "beltrami_sa_expansion": "operators",
    "submanifold_hamiltonian": "operators",
    # spectra
    "Spectrum": "spectra",
    "NumericalError": "spectra",
    "eigen_lowest": "spectra",
    "weighted_inner_product": "spectra",
    # squeeze
    "TubeSpectrum": "squeeze",
    "SqueezeRun": "squeeze",
    "tube_dirichlet_spectrum": "squeeze",
    "run_squeeze": "squeeze",
    "squeeze_extrapolate": "squeeze",
    # verification
    "CheckResult": "verification",
    "available_checks": "verification",
    "run_checks": "verification",
}

__all__ = sorted(_EXPORTS) + ["__version__"]


def __getattr__(name: str):
    module = _EXPORTS.get(name)
    if module is None:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    return getattr(importlib.import_module(f".{module}", __name__), name)


def __dir__():
    return __all__
