"""Command-line driver: generate | partition | slice | decay | validate | bench.

Flags override config-file values; every run writes a provenance record
(config hash, seed, library versions) next to its outputs.  Exit codes are a
stable contract: 0 success, 2 validation failure, 3 input error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import fields
from pathlib import Path

import numpy as np

from .basis import BasisBuildError, SliceParams, build_lss_basis, assemble_approx_operator
from .bounds import SpectrumScaling, optimize_alpha, decay_envelope
from .config import ConfigError, RunConfig, load_config_file, provenance
from .core import SparseHermitian, geodesic_distances, spectral_interval, UNREACHABLE
from .mmio import MatrixMarketError, read_matrix_market, write_matrix_market
from .models import ModelSpec1D, ModelSpec2D, generate_1d, generate_2d
from .oracle import OracleCapError, dense_eig, eigs_in_window, exact_lss_operator, \
    match_eigenvalues, max_norm_error
from .partition import (Partition, load_partition_map, partition_from_map,
                        partition_general, partition_mhop, partition_structured_1d,
                        partition_structured_2d, partition_summary, save_partition_map)
from .pipeline import run_slice, theoretical_error_bound
from .projection import PencilError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INPUT = 3


class ValidationFailure(RuntimeError):
    """A validation invariant did not hold."""


def _emit_error(exc: BaseException):
    payload = {"error": {"type": type(exc).__name__, "message": str(exc)}}
    print(json.dumps(payload), file=sys.stderr)


def _write_json(path: Path, payload: dict):
    with open(path, "w", encoding="ascii") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# config assembly
# ---------------------------------------------------------------------------

_CONFIG_FLAGS = {
    "mu": float, "sigma": float, "tau": float, "c_window": float,
    "window_halfwidth": float, "eta_abs": float, "eta_rel": float,
    "elements": int, "hops": int, "seed": int, "threads": int,
    "oracle_cap": int, "local_solver": str, "partition_method": str,
    "map_path": str, "matrix_path": str, "output_format": str, "output_dir": str,
}


def _merge_config(args) -> RunConfig:
    base = {}
    if getattr(args, "config", None):
        base = load_config_file(args.config)
    cfg_fields = {f.name for f in fields(RunConfig)}
    unknown = set(base) - cfg_fields
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    merged = dict(base)

    for name in _CONFIG_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            merged[name] = value
    # an input source given on the command line wins over one from the file
    model = _model_from_args(args)
    if model is not None:
        merged["model"] = model
        if getattr(args, "matrix_path", None) is None:
            merged.pop("matrix_path", None)
    elif getattr(args, "matrix_path", None) is not None:
        merged.pop("model", None)
    if getattr(args, "oracle", False):
        merged["oracle"] = True
    return RunConfig(**merged).validate()


def _model_from_args(args) -> dict | None:
    kind = getattr(args, "model", None)
    if kind is None:
        return None
    model = {"kind": kind}
    for key in ("nw", "h", "nx", "ny", "wells_per_dim"):
        value = getattr(args, key, None)
        if value is not None:
            model[key] = value
    return model


def build_matrix(config: RunConfig) -> SparseHermitian:
    if config.matrix_path is not None:
        return read_matrix_market(config.matrix_path)
    return build_model_matrix(config.model, config.seed)


def build_model_matrix(model: dict, seed: int) -> SparseHermitian:
    kind = model.get("kind")
    if kind == "1d":
        spec = ModelSpec1D(n_w=int(model.get("nw", 8)), h=float(model.get("h", 0.1)),
                           seed=seed)
        return generate_1d(spec)
    if kind == "2d":
        spec = ModelSpec2D(n_x=int(model.get("nx", 40)), n_y=int(model.get("ny", 40)),
                           h=float(model.get("h", 1.0)),
                           wells_per_dim=model.get("wells_per_dim"), seed=seed)
        return generate_2d(spec)
    raise ConfigError(f"unknown model kind {kind!r}")


def build_partition(config: RunConfig, A: SparseHermitian) -> Partition:
    method = config.partition_method
    M = config.elements
    if method == "map":
        part = partition_from_map(A, load_partition_map(config.map_path))
    elif method == "general":
        part = partition_general(A, M)
    else:
        if config.model is None:
            raise ConfigError("structured partitioning requires a generated model; "
                              "use --method general or --method map for matrix files")
        if config.model.get("kind") == "1d":
            part = partition_structured_1d(A.n, M)
        else:
            n_x = int(config.model.get("nx", 40))
            n_y = int(config.model.get("ny", 40))
            part = partition_structured_2d(n_x, n_y, M)
    if config.hops is not None:
        part = partition_mhop(A, part.elements, config.hops)
    return part


def slice_params(config: RunConfig) -> SliceParams:
    return SliceParams(mu=config.mu, sigma=config.sigma, tau=config.tau,
                       c_window=config.c_window, local_solver=config.local_solver)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    config = _merge_config(args)
    if config.model is None:
        raise ConfigError("generate requires --model 1d|2d")
    A = build_matrix(config)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    matrix_path = out / "matrix.mtx"
    write_matrix_market(matrix_path, A, comment=f"seed={config.seed}")
    _write_json(out / "provenance.json", provenance(config))
    print(f"wrote {matrix_path} (n={A.n}, nnz={A.nnz})")
    return EXIT_OK


def cmd_partition(args) -> int:
    config = _merge_config(args)
    A = build_matrix(config)
    part = build_partition(config, A)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_partition_map(out / "partition_map.txt", part.xi)
    summary = partition_summary(part)
    _write_json(out / "partition_summary.json", summary)
    _write_json(out / "provenance.json", provenance(config))
    print(f"wrote partition of n={part.n} into M={part.M} elements "
          f"(c_Q mean {summary['c_q']['mean']:.2f})")
    return EXIT_OK


def _oracle_comparison(A, result, config) -> dict:
    eig = dense_eig(A, cap=config.oracle_cap)
    lam, _ = eigs_in_window(A, result.window, eig=eig)
    accepted = result.accepted
    _, _, errors = match_eigenvalues(lam, accepted)
    return {
        "oracle_count": int(lam.size),
        "accepted_count": int(accepted.size),
        "matched_pairs": int(errors.size),
        "max_matched_error": float(errors.max()) if errors.size else 0.0,
    }


def cmd_slice(args) -> int:
    config = _merge_config(args)
    A = build_matrix(config)
    part = build_partition(config, A)
    params = slice_params(config)
    threads = config.threads if config.threads is not None else os.cpu_count()
    result = run_slice(A, part, params, window_halfwidth=config.window_halfwidth,
                       eta_abs=config.eta_abs, eta_rel=config.eta_rel,
                       threads=threads)
    if config.oracle and A.n <= config.oracle_cap:
        result.metadata["oracle"] = _oracle_comparison(A, result, config)

    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    result.to_json(out / "slice_result.json")
    if config.output_format == "csv":
        result.to_csv(out / "slice_result.csv")
    _write_json(out / "provenance.json", provenance(config))
    meta = result.metadata
    print(f"n_b={result.n_b}, candidates={meta['n_candidates']}, "
          f"accepted={meta['n_accepted']}, spurious={meta['n_spurious']}")
    for stage in ("basis", "assembly", "solve"):
        print(f"  {stage}: {result.timings[stage + '_seconds']:.3f} s")
    return EXIT_OK


def cmd_decay(args) -> int:
    config = _merge_config(args)
    A = build_matrix(config)
    if A.n > config.oracle_cap:
        raise OracleCapError(f"n={A.n} exceeds the oracle cap {config.oracle_cap}")
    column = args.column if args.column is not None else 0
    alphas = [float(a) for a in args.alphas.split(",")] if args.alphas else [0.25, 0.5, 1.0, 2.0]

    F = exact_lss_operator(A, config.mu, config.sigma, cap=config.oracle_cap)
    dm = geodesic_distances(A, [column])
    dist = dm.distances
    reach = dist != UNREACHABLE
    d_max = int(dist[reach].max())
    col = np.abs(F[:, column])

    scaling = SpectrumScaling.from_interval(*spectral_interval(A))
    models = [scaling.model(config.sigma, config.mu, alpha=a) for a in alphas]

    rows = []
    for d in range(1, d_max + 1):
        mask = reach & (dist == d)
        if not mask.any():
            continue
        rows.append((d, float(col[mask].max())))
    # max magnitude at or beyond each distance = truncation level at that cutoff
    tail = np.maximum.accumulate([r[1] for r in rows][::-1])[::-1]

    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = "d,max_abs,tail_max," + ",".join(f"envelope_alpha_{a:g}" for a in alphas)
    lines = [header]
    for (d, mx), tl in zip(rows, tail):
        envs = ",".join(f"{decay_envelope(m, d):.17g}" for m in models)
        lines.append(f"{d},{mx:.17g},{tl:.17g},{envs}")
    csv_path = out / "decay.csv"
    csv_path.write_text("\n".join(lines) + "\n", encoding="ascii")
    _write_json(out / "provenance.json", provenance(config))
    print(f"wrote {csv_path} ({len(rows)} distances, alphas {alphas})")
    return EXIT_OK


def cmd_validate(args) -> int:
    config = _merge_config(args)
    A = build_matrix(config)
    if A.n > config.oracle_cap:
        raise OracleCapError(f"n={A.n} exceeds the oracle cap {config.oracle_cap}")
    part = build_partition(config, A)
    params = slice_params(config)

    eig = dense_eig(A, cap=config.oracle_cap)
    F = exact_lss_operator(A, config.mu, config.sigma, eig=eig)
    basis = build_lss_basis(A, part, params)
    F_approx = assemble_approx_operator(basis, part).toarray()
    measured = max_norm_error(F, F_approx)
    bound_info = theoretical_error_bound(A, part, params, basis=basis)

    result = run_slice(A, part, params, window_halfwidth=config.window_halfwidth,
                       eta_abs=config.eta_abs, eta_rel=config.eta_rel)
    lam, _ = eigs_in_window(A, result.window, eig=eig)
    accepted = result.accepted
    _, _, errors = match_eigenvalues(lam, accepted)

    res_gap = 0.0
    if result.theta.size:
        denom = np.maximum(result.residuals_global, 1e-30)
        res_gap = float(np.max(np.abs(result.residuals_local - result.residuals_global) / denom))

    report = {
        "max_norm_error": measured,
        "bound": bound_info,
        "bound_satisfied": bool(measured <= bound_info["bound"]),
        "oracle_count": int(lam.size),
        "accepted_count": int(accepted.size),
        "max_matched_ritz_error": float(errors.max()) if errors.size else 0.0,
        "residual_local_vs_global_max_relative_gap": res_gap,
        "spurious_flagged": int(result.spurious.sum()),
    }
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "validate_report.json", report)
    _write_json(out / "provenance.json", provenance(config))

    print(json.dumps(report, indent=2))
    if not report["bound_satisfied"]:
        raise ValidationFailure(
            f"max-norm error {measured:.3e} exceeds bound {bound_info['bound']:.3e}")
    if report["oracle_count"] != report["accepted_count"]:
        raise ValidationFailure(
            f"accepted Ritz count {accepted.size} != oracle count {lam.size}")
    return EXIT_OK


def cmd_bench(args) -> int:
    config = _merge_config(args)
    if config.model is None or config.model.get("kind") != "1d":
        raise ConfigError("bench drives the 1d model; pass --model 1d")
    sizes = [int(s) for s in args.sizes.split(",")] if args.sizes else [1600, 3200, 6400]
    repeats = args.repeats
    base_n = sizes[0]
    base_m = config.elements
    params = slice_params(config)

    rows = []
    for n in sizes:
        if n % 200:
            raise ConfigError(f"1d bench sizes must be multiples of 200, got {n}")
        n_w = n // 200  # h = 0.1, 20 length units per well
        M = max(1, base_m * n // base_n)
        spec = ModelSpec1D(n_w=n_w, h=0.1, seed=config.seed)
        A = generate_1d(spec)
        part = partition_structured_1d(A.n, M)
        stage_times = []
        for _ in range(repeats):
            result = run_slice(A, part, params, window_halfwidth=config.window_halfwidth,
                               threads=config.threads)
            t = result.timings
            stage_times.append((t["basis_seconds"], t["assembly_seconds"],
                                t["solve_seconds"]))
        med = np.median(np.asarray(stage_times), axis=0)
        rows.append((n, M, float(med[0]), float(med[1]), float(med[2])))

    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["n,M,basis_seconds,assembly_seconds,solve_seconds"]
    for n, M, tb, ta, ts in rows:
        lines.append(f"{n},{M},{tb:.17g},{ta:.17g},{ts:.17g}")
    (out / "bench.csv").write_text("\n".join(lines) + "\n", encoding="ascii")
    _write_json(out / "provenance.json", provenance(config))

    print("\n".join(lines))
    if args.assert_linear:
        for (n0, _, tb0, ta0, _), (n1, _, tb1, ta1, _) in zip(rows, rows[1:]):
            if n1 != 2 * n0:
                continue
            ratio = (tb1 + ta1) / max(tb0 + ta0, 1e-12)
            if ratio > 2.6:
                raise ValidationFailure(
                    f"basis+assembly time ratio {ratio:.2f} from n={n0} to n={n1} "
                    f"exceeds 2.6")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON (or TOML on 3.11+) config file")
    p.add_argument("--matrix", dest="matrix_path", help="Matrix Market input file")
    p.add_argument("--model", choices=["1d", "2d"], help="generated model input")
    p.add_argument("--nw", type=int, help="1d: number of potential wells")
    p.add_argument("--h", type=float, help="grid spacing")
    p.add_argument("--nx", type=int, help="2d: grid points in x")
    p.add_argument("--ny", type=int, help="2d: grid points in y")
    p.add_argument("--wells-per-dim", dest="wells_per_dim", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", dest="output_dir", help="output directory")
    p.add_argument("--format", dest="output_format", choices=["json", "csv"])
    p.add_argument("--oracle-cap", dest="oracle_cap", type=int)


def _add_partition_flags(p: argparse.ArgumentParser):
    p.add_argument("--elements", type=int, help="number of elements M")
    p.add_argument("--method", dest="partition_method",
                   choices=["structured", "general", "map"])
    p.add_argument("--map-file", dest="map_path", help="partition map to import")
    p.add_argument("--hops", type=int, help="m-hop extended elements instead of one-hop")


def _add_slice_flags(p: argparse.ArgumentParser):
    p.add_argument("--mu", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--c-window", dest="c_window", type=float)
    p.add_argument("--window", dest="window_halfwidth", type=float,
                   help="reporting window halfwidth (default 0.5 sigma)")
    p.add_argument("--eta-abs", dest="eta_abs", type=float)
    p.add_argument("--eta-rel", dest="eta_rel", type=float)
    p.add_argument("--local-solver", dest="local_solver",
                   choices=["auto", "dense", "iterative"])
    p.add_argument("--threads", type=int)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specslice",
        description="Interior eigenvalues through a localized spectrum-slicing basis")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a model matrix to Matrix Market")
    _add_common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("partition", help="partition a matrix and export the map")
    _add_common(p)
    _add_partition_flags(p)
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("slice", help="run the interior eigenvalue pipeline")
    _add_common(p)
    _add_partition_flags(p)
    _add_slice_flags(p)
    p.add_argument("--oracle", action="store_true",
                   help="compare accepted Ritz values to the dense oracle")
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("decay", help="per-distance magnitudes of a slicing column")
    _add_common(p)
    _add_slice_flags(p)
    p.add_argument("--column", type=int, help="column to profile (default 0)")
    p.add_argument("--alphas", help="comma-separated envelope alpha grid")
    p.set_defaults(func=cmd_decay)

    p = sub.add_parser("validate", help="oracle-based validation report")
    _add_common(p)
    _add_partition_flags(p)
    _add_slice_flags(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bench", help="stage timings across sizes")
    _add_common(p)
    _add_partition_flags(p)
    _add_slice_flags(p)
    p.add_argument("--sizes", help="comma-separated n list (default 1600,3200,6400)")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--assert-linear", action="store_true",
                   help="fail if basis+assembly more than 2.6x per doubling")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationFailure as exc:
        _emit_error(exc)
        return EXIT_VALIDATION
    except (ConfigError, MatrixMarketError, OracleCapError, FileNotFoundError,
            ValueError) as exc:
        _emit_error(exc)
        return EXIT_INPUT
    except (PencilError, BasisBuildError) as exc:
        _emit_error(exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
