"""Batch command-line front end: ``sigmavqls {decompose,compare,verify,solve}``.

Every run reads an optional JSON config, applies the ``--seed``/``--shots``
overrides, writes its outputs plus ``manifest.json`` into the output directory
and exits with 0 (pass), 1 (verification failure or no convergence) or 2
(config error).
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import importlib.metadata
import json
import logging
import platform
import sys
from pathlib import Path

import jsonschema
import numpy as np

from .decomposer import BoundarySpec, decompose_heat, heat_closed_form_count, pauli_decompose
from .heat_problem import (
    HeatParams,
    build_system,
    classical_solve,
    fidelity,
    reconstruction_error,
    write_solution_csv,
)
from .sigma_core import ORACLE_LIMIT, format_terms
from .verify import VerifyOptions, run_suite
from .vqls import AnsatzSpec, OptimizerConfig, ProblemInstance, extract_solution, optimize, residual

log = logging.getLogger("sigmavqls")

COMMANDS = ("decompose", "compare", "verify", "solve")
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

_NUMBER = {"type": "number"}
_POS_INT = {"type": "integer", "minimum": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "seed": {"type": "integer", "minimum": 0},
        "output_dir": {"type": "string"},
        "heat": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_x": _POS_INT,
                "n_t": _POS_INT,
                "dx": _NUMBER,
                "dt": _NUMBER,
                "diffusivity": _NUMBER,
                "conductivity": _NUMBER,
                "flux": _NUMBER,
                "u0": {"oneOf": [{"type": "null"}, {"type": "array", "items": _NUMBER}]},
                "bc": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind"],
                    "properties": {"kind": {"enum": ["neumann", "robin"]}, "w1": _NUMBER, "w2": _NUMBER},
                },
            },
        },
        "ansatz": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"layers": _POS_INT, "entangler": {"enum": ["cz", "cnot"]}},
        },
        "optimizer": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "method": {"enum": ["nelder-mead", "spsa"]},
                "max_iters": _POS_INT,
                "cost_tolerance": {"type": "number", "exclusiveMinimum": 0},
                "shots": {"type": "integer", "minimum": 0},
                "cost_kind": {"enum": ["global", "local"]},
                "evaluator": {"enum": ["auto", "circuit", "statevector"]},
                "init_scale": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "compare": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "sizes": {
                    "type": "array",
                    "items": {"type": "array", "items": _POS_INT, "minItems": 2, "maxItems": 2},
                }
            },
        },
        "verify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                # exhaustive sweeps grow as 5**n; beyond these widths they stop being a check
                "exhaustive_qubits": {"type": "integer", "minimum": 1, "maximum": 5},
                "dilation_qubits": {"type": "integer", "minimum": 1, "maximum": 8},
                "hadamard_seeds": _POS_INT,
                "inject_fault": {"type": "boolean"},
            },
        },
    },
}

DEFAULTS = {
    "seed": 0,
    "output_dir": "sigmavqls-out",
    "heat": {
        "n_x": 4,
        "n_t": 4,
        "dx": 0.25,
        "dt": 0.01,
        "diffusivity": 1.0,
        "conductivity": 1.0,
        "flux": 2.5,
        "u0": None,
        "bc": {"kind": "neumann"},
    },
    "ansatz": {"layers": 5, "entangler": "cnot"},
    "optimizer": {
        "method": "nelder-mead",
        "max_iters": 20000,
        "cost_tolerance": 1e-4,
        "shots": 0,
        "cost_kind": "local",
        "evaluator": "auto",
        "init_scale": float(np.pi),
    },
    "compare": {"sizes": [[4, 4], [4, 8], [8, 8], [8, 16]]},
    "verify": {"exhaustive_qubits": 3, "dilation_qubits": 4, "hadamard_seeds": 2, "inject_fault": False},
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict) and key != "bc":
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_config(path: str | Path | None, overrides: dict | None = None) -> dict:
    """Validate a JSON config file and fill in defaults; raises :class:`ConfigError`."""
    raw: dict = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"schema error at {where}: {exc.message}") from exc
    cfg = _merge(DEFAULTS, raw)
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key == "shots":
            cfg["optimizer"]["shots"] = val
        else:
            cfg[key] = val
    return cfg


def heat_params(cfg: dict) -> HeatParams:
    h = dict(cfg["heat"])
    bc = h.pop("bc")
    spec = BoundarySpec.robin(bc.get("w1", 0.0), bc.get("w2", 1.0)) if bc["kind"] == "robin" else BoundarySpec()
    u0 = h.pop("u0")
    try:
        return HeatParams(**h, u0=None if u0 is None else tuple(u0), bc=spec)
    except ValueError as exc:
        raise ConfigError(f"heat: {exc}") from exc


def optimizer_config(cfg: dict) -> OptimizerConfig:
    try:
        return OptimizerConfig(seed=cfg["seed"], **cfg["optimizer"])
    except ValueError as exc:
        raise ConfigError(f"optimizer: {exc}") from exc


def config_hash(cfg: dict) -> str:
    """SHA-256 of the canonical resolved config; the output location is not part of it."""
    hashed = {k: v for k, v in cfg.items() if k != "output_dir"}
    canonical = json.dumps(hashed, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _versions() -> dict:
    out = {"python": platform.python_version()}
    for dist in ("artifact", "numpy", "scipy", "jsonschema"):
        try:
            out[dist] = importlib.metadata.version(dist)
        except importlib.metadata.PackageNotFoundError:
            out[dist] = None
    return out


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_manifest(out: Path, command: str, cfg: dict, outputs: list[str], exit_code: int) -> None:
    _write_json(
        out / "manifest.json",
        {
            "command": command,
            "config": cfg,
            "config_hash": config_hash(cfg),
            "seed": cfg["seed"],
            "versions": _versions(),
            "outputs": sorted(outputs),
            "exit_code": exit_code,
        },
    )


# -- commands ------------------------------------------------------------------


def cmd_decompose(cfg: dict, out: Path) -> tuple[int, list[str]]:
    params = heat_params(cfg)
    d = decompose_heat(params)
    (out / "terms.txt").write_text(format_terms(d))
    summary = {
        "n_x": params.n_x,
        "n_t": params.n_t,
        "num_qubits": params.num_qubits,
        "sigma_count_raw": len(d),
        "sigma_count_merged": len(d.merged()),
        "closed_form_count": heat_closed_form_count(params.n_x, params.n_t),
    }
    if params.num_qubits <= ORACLE_LIMIT:
        summary["reconstruction_residual"] = reconstruction_error(build_system(params))
    else:
        summary["reconstruction_residual"] = None
        log.warning("reconstruction check skipped: %d qubits exceeds the oracle limit", params.num_qubits)
    _write_json(out / "summary.json", summary)
    print(f"sigma terms: {summary['sigma_count_raw']} raw, {summary['sigma_count_merged']} merged; "
          f"residual {summary['reconstruction_residual']}")
    return EXIT_OK, ["terms.txt", "summary.json"]


COMPARE_FIELDS = ("N", "n_x", "n_t", "pauli_count", "sigma_count_merged", "sigma_count_raw",
                  "pauli_residual", "sigma_residual")


def cmd_compare(cfg: dict, out: Path) -> tuple[int, list[str]]:
    base = cfg["heat"]
    rows = []
    for n_x, n_t in cfg["compare"]["sizes"]:
        params = heat_params({**cfg, "heat": {**base, "n_x": n_x, "n_t": n_t, "u0": None}})
        if params.num_qubits > ORACLE_LIMIT:
            raise ConfigError(
                f"size ({n_x}, {n_t}) needs {params.num_qubits} qubits, above the oracle limit of {ORACLE_LIMIT}"
            )
        system = build_system(params)
        pauli = pauli_decompose(system.dense_a)
        rows.append({
            "N": n_x * n_t,
            "n_x": n_x,
            "n_t": n_t,
            "pauli_count": pauli.count,
            "sigma_count_merged": len(system.decomposition.merged()),
            "sigma_count_raw": len(system.decomposition),
            "pauli_residual": float(np.max(np.abs(pauli.to_matrix() - system.dense_a))),
            "sigma_residual": reconstruction_error(system),
        })
    with open(out / "compare.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=COMPARE_FIELDS)
        w.writeheader()
        w.writerows(rows)
    for r in rows:
        print(f"N={r['N']:>4}  pauli={r['pauli_count']:>4}  sigma={r['sigma_count_merged']} merged / "
              f"{r['sigma_count_raw']} raw")
    return EXIT_OK, ["compare.csv"]


def cmd_verify(cfg: dict, out: Path) -> tuple[int, list[str]]:
    params = heat_params(cfg)
    v = cfg["verify"]
    opts = VerifyOptions(
        exhaustive_qubits=v["exhaustive_qubits"],
        dilation_qubits=v["dilation_qubits"],
        hadamard_seeds=v["hadamard_seeds"],
        inject_fault=v["inject_fault"],
        seed=cfg["seed"],
    )
    results = run_suite(params, opts)
    passed = all(r.passed for r in results)
    _write_json(out / "verify.json", {"passed": passed, "checks": [r.to_dict() for r in results]})
    for r in results:
        tag = "SKIP" if r.skipped else ("PASS" if r.passed else "FAIL")
        print(f"{tag}  {r.name}: {r.detail}")
    return (EXIT_OK if passed else EXIT_FAIL), ["verify.json"]


TRACE_FIELDS = ("iteration", "c_global", "c_local", "phi_norm_sq", "overlap_sq")


def _jsonable_scalar(z: complex):
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


def cmd_solve(cfg: dict, out: Path) -> tuple[int, list[str]]:
    params = heat_params(cfg)
    opt = optimizer_config(cfg)
    system = build_system(params)
    problem = ProblemInstance.from_system(system)
    spec = AnsatzSpec(params.num_qubits, cfg["ansatz"]["layers"], cfg["ansatz"]["entangler"])
    result = optimize(problem, spec, opt)
    x_hat, scale = extract_solution(problem, spec, result.theta)
    x_ref = classical_solve(system)
    best = result.best
    summary = {
        "cost_kind": opt.cost_kind,
        "final_cost": best.cost(opt.cost_kind),
        "c_global": best.c_global,
        "c_local": best.c_local,
        "converged": result.converged,
        "status": result.status,
        "iterations": result.iterations,
        "evaluations": result.evaluations,
        "fidelity": fidelity(x_ref, x_hat),
        "residual": residual(problem, scale * x_hat),
        "scale": _jsonable_scalar(scale),
        "theta": list(best.theta),
    }
    _write_json(out / "result.json", summary)
    with open(out / "trace.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_FIELDS)
        for i, rep in enumerate(result.trace, start=1):
            w.writerow([i, repr(rep.c_global), repr(rep.c_local), repr(rep.phi_norm_sq), repr(rep.overlap_sq)])
    write_solution_csv(out / "solution.csv", params, (scale * x_hat).real)
    write_solution_csv(out / "classical.csv", params, x_ref)
    print(f"{result.status}: {opt.cost_kind} cost {summary['final_cost']:.3e} after {result.iterations} "
          f"iterations, fidelity {summary['fidelity']:.6f}")
    return (EXIT_OK if result.converged else EXIT_FAIL), ["result.json", "trace.csv", "solution.csv", "classical.csv"]


HANDLERS = {"decompose": cmd_decompose, "compare": cmd_compare, "verify": cmd_verify, "solve": cmd_solve}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sigmavqls", description=__doc__.splitlines()[0])
    ap.add_argument("command", nargs="?", choices=COMMANDS, help="defaults to the config's 'command'")
    ap.add_argument("--config", type=Path, help="JSON run configuration")
    ap.add_argument("--seed", type=int, help="overrides the config seed")
    ap.add_argument("--shots", type=int, help="overrides optimizer.shots (0 = exact)")
    ap.add_argument("--out", type=Path, help="output directory (overrides output_dir)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        if args.shots is not None and args.shots < 0:
            raise ConfigError("--shots must be non-negative")
        cfg = load_config(args.config, {"seed": args.seed, "shots": args.shots})
        if args.out is not None:
            cfg["output_dir"] = str(args.out)
        command = args.command or cfg.get("command")
        if command is None:
            raise ConfigError("no command given on the command line or in the config")
        cfg["command"] = command
        out = Path(cfg["output_dir"])
        out.mkdir(parents=True, exist_ok=True)
        code, outputs = HANDLERS[command](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    write_manifest(out, command, cfg, outputs, code)
    return code


if __name__ == "__main__":
    sys.exit(main())
