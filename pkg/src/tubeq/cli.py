"""Command line front end.

Tasks: curvature, potential, spectrum, squeeze, verify. Each reads a JSON
config, writes deterministic CSV output (12 significant digits, fixed
column order, same bytes for the same config) and reports errors on
stderr with distinct exit codes: 2 for configuration problems (the message
names the offending field), 3 for numerical failures, 1 for failed
verification checks.

Only the standard library is imported at module scope so that the
TUBEQ_THREADS cap can be exported to the BLAS runtime before numpy loads.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_THREAD_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)

_TASKS = ("curvature", "potential", "spectrum", "squeeze", "verify")


class ConfigError(Exception):
    """Configuration problem tied to a specific field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


def _configure_threads() -> None:
    raw = os.environ.get("TUBEQ_THREADS")
    if raw is None:
        return
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError("TUBEQ_THREADS", f"expected a positive integer, got {raw!r}")
    if n < 1:
        raise ConfigError("TUBEQ_THREADS", f"expected a positive integer, got {raw!r}")
    for var in _THREAD_VARS:
        os.environ[var] = str(n)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tubeq",
        description="Curvature-induced quantum mechanics on embedded curves and surfaces.",
    )
    parser.add_argument("task", choices=_TASKS, help="what to compute")
    parser.add_argument(
        "--config",
        help="path to the JSON run configuration (optional for verify)",
    )
    parser.add_argument(
        "--out",
        default=None,
        help="output directory for CSV files (default: options.output or .)",
    )
    parser.add_argument(
        "--dump-matrix",
        action="store_true",
        help="also write the assembled operator in Matrix Market format (spectrum task)",
    )
    return parser


# ---------------------------------------------------------------------------
# config validation


def _expect_keys(cfg: dict, allowed: dict, where: str = "") -> None:
    prefix = where + "." if where else ""
    for key in cfg:
        if key not in allowed:
            raise ConfigError(prefix + str(key), "unexpected field")
    for key, required in allowed.items():
        if required and key not in cfg:
            raise ConfigError(prefix + key, "missing required field")


def _check_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {type(value).__name__}")
    return float(value)


def _check_int(value, path: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"expected an integer, got {type(value).__name__}")
    if value < minimum:
        raise ConfigError(path, f"expected an integer >= {minimum}, got {value}")
    return value


def _validate_shape(shape) -> dict:
    if not isinstance(shape, dict):
        raise ConfigError("shape", "expected an object")
    if "file" in shape:
        _expect_keys(shape, {"file": True}, "shape")
        if not isinstance(shape["file"], str):
            raise ConfigError("shape.file", "expected a path string")
        return {"file": shape["file"]}
    _expect_keys(shape, {"name": True, "params": True}, "shape")
    if not isinstance(shape["name"], str):
        raise ConfigError("shape.name", "expected a shape name string")
    params = shape["params"]
    if not isinstance(params, list):
        raise ConfigError("shape.params", "expected a list of numbers")
    values = []
    for i, p in enumerate(params):
        values.append(_check_number(p, f"shape.params[{i}]"))
        if values[-1] <= 0:
            raise ConfigError(f"shape.params[{i}]", f"expected a positive number, got {p}")
    return {"name": shape["name"], "params": values}


def _validate_grid(grid) -> list:
    if not isinstance(grid, list) or not grid:
        raise ConfigError("grid", "expected a non-empty list of node counts")
    if len(grid) > 2:
        raise ConfigError("grid", "expected at most two axes")
    return [_check_int(g, f"grid[{i}]", 2) for i, g in enumerate(grid)]


def _validate_task_field(cfg: dict, task: str) -> None:
    declared = cfg.get("task")
    if declared is None:
        return
    if not isinstance(declared, str) or declared not in _TASKS:
        raise ConfigError("task", f"expected one of {', '.join(_TASKS)}, got {declared!r}")
    if declared != task:
        raise ConfigError("task", f"config says {declared!r} but the command line asked for {task!r}")


def _validate_options(cfg: dict, task: str) -> dict:
    options = cfg.get("options", {})
    if not isinstance(options, dict):
        raise ConfigError("options", "expected an object")

    allowed = {"output": False}
    if task == "spectrum":
        allowed["count"] = False
    if task == "squeeze":
        allowed.update({"count": False, "epsilons": True})
    if task == "verify":
        allowed = {"checks": False}
    _expect_keys(options, allowed, "options")

    out: dict = {}
    output = options.get("output")
    if output is not None:
        if not isinstance(output, str):
            raise ConfigError("options.output", "expected a directory path string")
        out["output"] = output

    if task == "verify":
        checks = options.get("checks")
        if checks is not None:
            if not isinstance(checks, list) or not all(isinstance(c, str) for c in checks):
                raise ConfigError("options.checks", "expected a list of check names")
        out["checks"] = checks
        return out

    if task in ("spectrum", "squeeze"):
        default = 6 if task == "spectrum" else 4
        out["count"] = _check_int(options.get("count", default), "options.count", 1)

    if task == "squeeze":
        eps = options.get("epsilons")
        if not isinstance(eps, list) or len(eps) < 3:
            raise ConfigError("options.epsilons", "expected a list of at least 3 half-widths")
        vals = []
        for i, e in enumerate(eps):
            v = _check_number(e, f"options.epsilons[{i}]")
            if v <= 0:
                raise ConfigError(f"options.epsilons[{i}]", f"expected a positive number, got {e}")
            vals.append(v)
        out["epsilons"] = vals

    return out


def _validate_config(cfg, task: str) -> dict:
    if not isinstance(cfg, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    if task == "verify":
        _expect_keys(cfg, {"task": False, "options": False})
        _validate_task_field(cfg, task)
        out = _validate_options(cfg, task)
        out.setdefault("checks", None)
        return out

    _expect_keys(cfg, {"shape": True, "grid": True, "boundary": False, "task": False, "options": False})
    _validate_task_field(cfg, task)

    out = {"shape": _validate_shape(cfg["shape"]), "grid": _validate_grid(cfg["grid"])}

    boundary = cfg.get("boundary")
    if boundary is not None:
        if boundary not in ("periodic", "dirichlet"):
            raise ConfigError("boundary", f"expected 'periodic' or 'dirichlet', got {boundary!r}")
    out["boundary"] = boundary
    out.update(_validate_options(cfg, task))
    return out


def _load_config(path: str | None, task: str) -> dict:
    if path is None:
        if task == "verify":
            return {"checks": None}
        raise ConfigError("--config", f"the {task} task requires a config file")
    p = Path(path)
    if not p.is_file():
        raise ConfigError("--config", f"no such file: {path}")
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"not valid JSON ({exc})")
    return _validate_config(cfg, task)


# ---------------------------------------------------------------------------
# task execution (heavy imports stay inside these functions)


def _build_embedding(shape: dict):
    from . import geometry

    if "file" in shape:
        try:
            return geometry.load_sampled_curve(shape["file"])
        except (OSError, ValueError) as exc:
            raise ConfigError("shape.file", str(exc))
    try:
        return geometry.catalog_shape(shape["name"], shape["params"])
    except ValueError as exc:
        raise ConfigError("shape", str(exc))


def _build_grid(embedding, counts: list):
    from . import geometry

    if len(counts) != embedding.intrinsic_dim:
        raise ConfigError(
            "grid",
            f"shape has {embedding.intrinsic_dim} parameter axis(es), "
            f"config gives {len(counts)}",
        )
    try:
        return geometry.make_grid(embedding, counts)
    except ValueError as exc:
        raise ConfigError("grid", str(exc))


def _check_boundary(grid, requested: str | None) -> str:
    inferred = "periodic" if all(grid.periodic) else "dirichlet"
    if requested is not None and requested != inferred:
        raise ConfigError(
            "boundary",
            f"'{requested}' is incompatible with the shape's domain (expected '{inferred}')",
        )
    return inferred


def _fmt(value) -> str:
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    return f"{float(value):.12g}"


def _write_csv(path: Path, header: list, rows: list) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _frame_pipeline(embedding, grid):
    from . import frames as fr

    frames = fr.build_frames(embedding, grid)
    coeffs = fr.connection_coefficients(embedding, frames)
    return fr.hashimoto_rotate(coeffs, frames)


def _run_curvature(cfg: dict, out_dir: Path) -> int:
    import numpy as np

    from . import frames as fr

    embedding = _build_embedding(cfg["shape"])
    grid = _build_grid(embedding, cfg["grid"])
    _check_boundary(grid, cfg["boundary"])
    frames, coeffs = _frame_pipeline(embedding, grid)
    curv = fr.curvature_data(embedding, frames, coeffs)
    nodes = grid.nodes()

    rows = []
    if curv.kind == "curve":
        header = ["s", "kappa", "tau", "kappa_c_re", "kappa_c_im"]
        tau = curv.tau if curv.tau is not None else np.zeros(grid.size)
        for m in range(grid.size):
            rows.append(
                [nodes[m, 0], curv.kappa[m], tau[m], curv.kappa_c[m].real, curv.kappa_c[m].imag]
            )
    elif curv.kind == "surface3":
        header = ["u", "v", "mean_h", "gauss_k"]
        for m in range(grid.size):
            rows.append([nodes[m, 0], nodes[m, 1], curv.mean_h[m], curv.gauss_k[m]])
    else:
        header = ["u", "v", "h1", "h2"]
        for m in range(grid.size):
            rows.append(
                [nodes[m, 0], nodes[m, 1], curv.h_components[m, 0], curv.h_components[m, 1]]
            )

    path = out_dir / "curvature.csv"
    _write_csv(path, header, rows)
    print(f"wrote {path} ({len(rows)} rows)")
    return EXIT_OK


def _run_potential(cfg: dict, out_dir: Path) -> int:
    from . import tubular

    embedding = _build_embedding(cfg["shape"])
    grid = _build_grid(embedding, cfg["grid"])
    _check_boundary(grid, cfg["boundary"])
    frames, coeffs = _frame_pipeline(embedding, grid)
    pot = tubular.effective_potential(coeffs, frames)
    nodes = grid.nodes()

    coord_names = ["s"] if grid.ndim == 1 else ["u", "v"]
    header = coord_names + ["v_eff"]
    rows = [list(nodes[m]) + [pot[m]] for m in range(grid.size)]
    path = out_dir / "potential.csv"
    _write_csv(path, header, rows)
    print(f"wrote {path} ({len(rows)} rows)")
    return EXIT_OK


def _run_spectrum(cfg: dict, out_dir: Path, dump_matrix: bool) -> int:
    from . import operators, spectra

    embedding = _build_embedding(cfg["shape"])
    grid = _build_grid(embedding, cfg["grid"])
    _check_boundary(grid, cfg["boundary"])
    ham = operators.submanifold_hamiltonian(embedding, grid)

    if dump_matrix:
        from scipy.io import mmwrite

        mtx_path = out_dir / "operator.mtx"
        mmwrite(str(mtx_path), ham.matrix)
        print(f"wrote {mtx_path}")

    spec = spectra.eigen_lowest(ham, cfg["count"])
    header = ["level", "eigenvalue", "residual"]
    rows = [
        [j, spec.eigenvalues[j], spec.residuals[j]] for j in range(len(spec.eigenvalues))
    ]
    path = out_dir / "spectrum.csv"
    _write_csv(path, header, rows)
    print(f"wrote {path} ({len(rows)} rows)")
    return EXIT_OK


def _run_squeeze(cfg: dict, out_dir: Path) -> int:
    from . import squeeze as sq

    embedding = _build_embedding(cfg["shape"])
    if len(cfg["grid"]) != 2:
        raise ConfigError("grid", "squeeze needs [longitudinal, transverse] node counts")
    try:
        run = sq.run_squeeze(embedding, cfg["epsilons"], cfg["grid"], cfg["count"])
        run = sq.squeeze_extrapolate(run)
    except (ValueError, NotImplementedError) as exc:
        msg = str(exc)
        if "epsilon" in msg:
            field = "options.epsilons"
        elif "transverse" in msg or "grid" in msg:
            field = "grid"
        else:
            field = "shape"
        raise ConfigError(field, msg)

    header = ["epsilon", "level", "raw", "transverse", "subtracted", "extrapolated"]
    rows = []
    for i, eps in enumerate(run.epsilons):
        for j in range(run.raw.shape[1]):
            rows.append(
                [
                    eps,
                    j,
                    run.raw[i, j],
                    run.transverse[i],
                    run.subtracted[i, j],
                    run.limits[j],
                ]
            )
    path = out_dir / "squeeze.csv"
    _write_csv(path, header, rows)
    print(f"wrote {path} ({len(rows)} rows)")
    return EXIT_OK


def _run_verify(cfg: dict) -> int:
    from . import verification

    try:
        results = verification.run_checks(cfg["checks"])
    except ValueError as exc:
        raise ConfigError("checks", str(exc))

    width = max(len(r.name) for r in results)
    failed = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        failed += 0 if r.passed else 1
        print(f"{r.name:<{width}}  {status}  measured {r.value:.3e}  bound {r.bound:.1e}")
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_VERIFY_FAILED


def main(argv: "list[str] | None" = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        _configure_threads()
        cfg = _load_config(args.config, args.task)

        out_dir = Path(args.out if args.out is not None else cfg.get("output", "."))
        if not out_dir.is_dir():
            try:
                out_dir.mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise ConfigError("--out", f"cannot create output directory: {exc}")

        if args.task == "curvature":
            return _run_curvature(cfg, out_dir)
        if args.task == "potential":
            return _run_potential(cfg, out_dir)
        if args.task == "spectrum":
            return _run_spectrum(cfg, out_dir, args.dump_matrix)
        if args.task == "squeeze":
            return _run_squeeze(cfg, out_dir)
        return _run_verify(cfg)
    except ConfigError as exc:
        print(f"tubeq: config error at {exc.path}: {exc.message}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"tubeq: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # numerical layer failures
        from .spectra import NumericalError

        import numpy as np

        if isinstance(exc, (NumericalError, np.linalg.LinAlgError)):
            print(f"tubeq: numerical failure: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        raise


if __name__ == "__main__":
    raise SystemExit(main())
