"""Command-line front end.

Exit codes: 0 when every check passes, 2 when a check fails, 1 on usage or
I/O errors.  Reports are JSON, written to stdout or to ``--report``; they
carry the tool version, a hash of the configuration, the seed and the
tolerances, and contain nothing run-dependent, so identical configurations
give byte-identical reports.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from pathlib import Path

from . import __version__

SURFACES = ("plane", "graph", "round_sphere", "catenoid", "helicoid", "clifford_torus", "lawson")
TRANSFORM_KINDS = ("spin", "conjugate", "darboux-left", "darboux-right", "darboux-two-sided")
THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS")
DEFAULT_GATE = 400.0  # checks on a single grid pass when mean residual <= DEFAULT_GATE * (h/L)^2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _apply_threads() -> int | None:
    raw = os.environ.get("CLIFFSURF_THREADS")
    if raw is None:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"CLIFFSURF_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"CLIFFSURF_THREADS must be a positive integer, got {raw!r}")
    for var in THREAD_VARS:
        os.environ[var] = str(n)
    return n


# config and reports -----------------------------------------------------
_NOT_CONFIG = {"report", "output", "csv", "func"}


def config_of(args: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_CONFIG}


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _clean(obj):
    """JSON-safe copy: numpy scalars to floats, NaN and inf to strings."""
    import math

    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not hasattr(obj, "__len__"):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def emit(args: argparse.Namespace, body: dict, passed: bool, tolerances: dict | None = None) -> int:
    config = config_of(args)
    report = {
        "tool": "cliffsurf",
        "version": __version__,
        "command": args.command,
        "config": config,
        "config_hash": config_hash(config),
        "seed": getattr(args, "seed", None),
        "tolerances": tolerances or {},
        "threads": _apply_threads(),
        "pass": bool(passed),
        **body,
    }
    text = json.dumps(_clean(report), indent=2, sort_keys=True)
    if getattr(args, "report", None):
        Path(args.report).write_text(text + "\n")
    else:
        print(text)
    return 0 if passed else 2


def _gate(grid, factor: float) -> float:
    length = min(grid.du * grid.nu, grid.dv * grid.nv)
    return factor * (grid.h / length) ** 2


def _load(path: str):
    from .grid import SurfaceGrid

    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    return SurfaceGrid.load(p)


def _check_out(path: str | None) -> None:
    if path and not Path(path).resolve().parent.is_dir():
        raise FileNotFoundError(f"output directory does not exist: {path}")


def _params(args) -> dict:
    out = {}
    for key in ("m", "k", "a", "b", "c"):
        v = getattr(args, key, None)
        if v is not None:
            out[key] = v
    return out


def _grids(text: str) -> list[int]:
    try:
        sizes = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--grids must be comma-separated integers, got {text!r}") from None
    if len(sizes) < 2 or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise UsageError("--grids needs at least two increasing sizes")
    return sizes


# commands ---------------------------------------------------------------
def cmd_generate(args) -> int:
    from .zoo import SurfaceSpec, generate

    _check_out(args.output)
    spec = SurfaceSpec(args.surface, args.nu, args.nv if args.nv is not None else args.nu, _params(args))
    grid = generate(spec)
    grid.save(args.output)
    return emit(args, {"surface": spec.to_json(), "r": grid.r, "output": args.output}, True)


def cmd_analyze(args) -> int:
    import numpy as np

    from .calculus import (
        conformality_residual,
        gauss_map,
        harmonicity_residual,
        hopf_report,
        mcv_identity_residual,
    )
    from .studies import default_margin

    _check_out(args.report)
    f = _load(args.input)
    margin = default_margin(f) if args.margin is None else args.margin
    thr = _gate(f, args.gate)
    reports, gated = {}, []
    if f.values.grades() <= {1}:
        N = gauss_map(f)
        reports["conformality"] = conformality_residual(f, N, margin)
        reports["hopf"] = hopf_report(f, N, margin)
        reports["mcv_identity"] = mcv_identity_residual(f, N, margin=margin)
        gated += ["conformality", "mcv_identity"]
    q = np.broadcast_to(sum(c * c for c in f.values.coeffs.values()), f.shape)
    if np.max(np.abs(q - 1.0)) <= 1e-8:
        reports["harmonicity"] = harmonicity_residual(f, margin)
    if not reports:
        raise UsageError("analyze needs a V_r-valued or sphere-valued grid")
    passed = all(reports[k].mean <= thr for k in gated)
    if args.csv:
        key = gated[0] if gated else "harmonicity"
        reports[key].write_csv(args.csv, f)
    body = {"input": args.input, "margin": margin, "gated": gated,
            "reports": {k: v.to_json() for k, v in reports.items()}}
    return emit(args, body, passed, {"mean_threshold": thr, "gate_factor": args.gate})


def _lambda_for(args, f, default: str):
    from .transforms import lambda_recipe

    if args.lambda_file:
        return _load(args.lambda_file)
    return lambda_recipe(f, args.recipe or default)


def cmd_transform(args) -> int:
    from .algebra import basis_blade
    from .transforms import conjugate_surface, darboux, darboux_two_sided, spin_transform

    _check_out(args.output)
    _check_out(args.report)
    f = _load(args.input)
    margin = args.margin
    thr = _gate(f, args.gate)
    tolerances = {"mean_threshold": thr, "gate_factor": args.gate}
    if args.kind == "spin":
        lam = _lambda_for(args, f, "f_sharp")
        res = spin_transform(f, lam, margin=margin)
        out, body = res.f_new, res.to_json()
        passed = res.conformality.mean <= thr
    elif args.kind == "conjugate":
        res = conjugate_surface(f, margin=margin)
        out, body = res.h, res.to_json()
        tolerances["construction"] = 1e-12
        passed = res.construction.max <= 1e-12
    elif args.kind in ("darboux-left", "darboux-right"):
        side = args.kind.split("-")[1]
        lam = _lambda_for(args, f, "N")
        g_base = basis_blade(f.r, 1, coeff=-2.0) if not args.lambda_file else None
        res = darboux(f, lam, side, g_base=g_base, margin=margin)
        out, body = res.f_sharp, res.to_json()
        passed = res.defining_residual.mean <= thr
    else:
        res = darboux_two_sided(f, margin=margin)
        out, body = res.f_sharp, res.to_json()
        passed = res.defining_residual.mean <= thr
    out.save(args.output)
    body = {"kind": args.kind, "input": args.input, "output": args.output, "result": body}
    return emit(args, body, passed, tolerances)


def _sweep_samples(kind: str, n: int) -> list[dict]:
    from .connections import sigma_samples, theta_samples, unit_circle_samples

    if kind == "circle":
        return unit_circle_samples(n)
    if kind == "sigma":
        return sigma_samples(n=n)
    return theta_samples(n)


def cmd_connections(args) -> int:
    from .calculus import gauss_map
    from .connections import evaluate_sample, flatness_sweep
    from .studies import default_margin, grid_factory

    _check_out(args.report)
    if bool(args.input) == bool(args.surface):
        raise UsageError("connections needs exactly one of --input or --surface")
    if args.input:
        grids = [_load(args.input)]
    else:
        make = grid_factory(args.surface, _params(args))
        grids = [make(n) for n in _grids(args.grids)]
    if args.gauss:
        grids = [gauss_map(g) for g in grids]
    margin = default_margin(grids[0]) if args.margin is None else args.margin
    samples = _sweep_samples(args.sweep, args.samples)
    body = {"sweep": args.sweep, "variant": args.variant, "margin": margin}
    tolerances = {}
    if len(grids) > 1:
        rep = flatness_sweep(grids, samples, args.variant, margin)
        body.update(rep.to_json())
        passed = rep.passed
        tolerances["ratio_window"] = list(rep.window)
        if args.csv:
            with open(args.csv, "w", newline="") as fh:
                csv.writer(fh).writerows(rep.to_csv_rows())
    else:
        thr = _gate(grids[0], args.gate)
        rows = [evaluate_sample(grids[0], s, args.variant, margin).to_json() for s in samples]
        body["rows"] = rows
        passed = all(r["mean"] <= thr for r in rows)
        tolerances["mean_threshold"] = thr
    if args.controls:
        body["controls"] = [
            [evaluate_sample(g, {"kind": "lambda_xy", "x": x, "y": 0.0}, args.variant, margin).to_json()
             for g in grids] for x in (1.2, 1.5)
        ]
    return emit(args, body, passed, tolerances)


def cmd_duality(args) -> int:
    from .duality import (
        bipolar_reindex,
        minimal_sequence,
        polar_dual,
        sequence_darboux_relation,
        spinor_degree,
    )

    if args.op == "degree":
        if args.genus is None or args.r is None:
            raise UsageError("--op degree needs --genus and --r")
        d = spinor_degree(args.genus, args.r)
        if args.report:
            emit(args, {"op": "degree", "genus": args.genus, "r": args.r, "degree": d}, True)
        print(d)
        return 0
    if not args.input:
        raise UsageError(f"--op {args.op} needs --input")
    _check_out(args.output)
    _check_out(args.report)
    f = _load(args.input)
    thr = _gate(f, args.gate)
    tolerances = {"mean_threshold": thr, "gate_factor": args.gate}
    if args.op == "polar":
        res = polar_dual(f, margin=args.margin or 0.0)
        if args.output:
            res.fN.save(args.output)
        return emit(args, {"op": "polar", "result": res.to_json()}, res.conformality.mean <= thr, tolerances)
    if args.op == "bipolar":
        from .calculus import gauss_map

        g = bipolar_reindex(f if f.values.grades() == {2} else gauss_map(f))
        if args.output:
            g.save(args.output)
        return emit(args, {"op": "bipolar", "r": g.r, "meta": g.meta}, True, tolerances)
    if args.op == "ladder":
        res = sequence_darboux_relation(f, n_max=args.steps, margin=args.margin or 0.0)
        passed = all(r.mean <= thr for r in res.right + res.left)
        return emit(args, {"op": "ladder", "result": res.to_json()}, passed, tolerances)
    steps = minimal_sequence(f, args.steps)
    items = []
    for s in steps:
        item = s.to_json(embed=not args.no_embed)
        if args.no_embed and args.output:
            path = Path(args.output).with_suffix(f".level{s.level}.json")
            s.surface.save(path)
            item["surface_file"] = str(path)
        items.append(item)
    if args.output:
        Path(args.output).write_text(json.dumps(_clean(items)))
    body = {"op": "sequence", "steps": [{k: v for k, v in it.items() if k != "surface"} for it in items]}
    return emit(args, body, True, tolerances)


def cmd_algebra_check(args) -> int:
    from .properties import algebra_check

    _check_out(args.report)
    results = algebra_check(args.r, args.trials, args.seed)
    body = {"r": args.r, "trials": args.trials, "families": [x.to_json() for x in results]}
    return emit(args, body, all(x.passed for x in results), {x.name: x.tol for x in results})


def cmd_study(args) -> int:
    from .studies import run_study

    _check_out(args.report)
    res = run_study(args.surface, args.check, _grids(args.grids), _params(args), args.margin, args.aspect)
    print(res.table(), file=sys.stderr)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", args.check, "ratio"])
            for k, (n, v) in enumerate(zip(res.grids, res.values)):
                w.writerow([n, v, res.ratios[k - 1] if k else ""])
    return emit(args, {"study": res.to_json(), "table": res.table()}, res.passed,
                {"ratio_window": list(res.window)})


# parser -----------------------------------------------------------------
def _surface_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--m", type=int, help="lawson m")
    p.add_argument("--k", type=int, help="lawson k")
    p.add_argument("--a", type=float, help="graph coefficient a")
    p.add_argument("--b", type=float, help="graph coefficient b")
    p.add_argument("--c", type=float, help="graph coefficient c")


def build_parser() -> argparse.ArgumentParser:
    from .studies import CHECKS

    top = _Parser(prog="cliffsurf", description=__doc__.split("\n")[0])
    top.add_argument("--version", action="version", version=f"cliffsurf {__version__}")
    sub = top.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("--report", help="write the JSON report here instead of stdout")
        p.add_argument("--seed", type=int, default=0, help="seed for randomised checks")
        return p

    p = add("generate", cmd_generate, "sample a zoo surface onto a grid")
    p.add_argument("--surface", required=True, choices=SURFACES)
    p.add_argument("--nu", type=int, default=64)
    p.add_argument("--nv", type=int)
    _surface_params(p)
    p.add_argument("-o", "--output", required=True)

    p = add("analyze", cmd_analyze, "conformality, Hopf, harmonicity and mean-curvature residuals")
    p.add_argument("--input", required=True)
    p.add_argument("--margin", type=float)
    p.add_argument("--gate", type=float, default=DEFAULT_GATE)
    p.add_argument("--csv", help="per-node dump of the first gated residual")

    p = add("transform", cmd_transform, "spin, conjugate and Darboux transforms")
    p.add_argument("--kind", required=True, choices=TRANSFORM_KINDS)
    p.add_argument("--input", required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--lambda", dest="lambda_file", help="spectral parameter grid")
    g.add_argument("--recipe", choices=("const_pin", "N", "N_plus_c", "fN", "f_sharp"))
    p.add_argument("--margin", type=float, default=0.0)
    p.add_argument("--gate", type=float, default=DEFAULT_GATE)
    p.add_argument("-o", "--output", required=True)

    p = add("connections", cmd_connections, "curvature of the flat-connection families")
    p.add_argument("--input")
    p.add_argument("--surface", choices=SURFACES)
    p.add_argument("--grids", default="32,64,128")
    _surface_params(p)
    p.add_argument("--gauss", action="store_true", help="use the Gauss map of the surface")
    p.add_argument("--sweep", required=True, choices=("circle", "sigma", "theta"))
    p.add_argument("--samples", type=int, default=8)
    p.add_argument("--variant", choices=("Phi", "PhiTilde"), default="Phi")
    p.add_argument("--controls", action="store_true", help="add the (1.2, 0) and (1.5, 0) controls")
    p.add_argument("--margin", type=float)
    p.add_argument("--gate", type=float, default=DEFAULT_GATE)
    p.add_argument("--csv")

    p = add("duality", cmd_duality, "polar and bipolar duals, the sequence and the degree formula")
    p.add_argument("--input")
    p.add_argument("--op", required=True, choices=("polar", "bipolar", "sequence", "degree", "ladder"))
    p.add_argument("--steps", type=int, default=1)
    p.add_argument("--genus", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--no-embed", action="store_true", help="write sequence surfaces to separate files")
    p.add_argument("--margin", type=float)
    p.add_argument("--gate", type=float, default=DEFAULT_GATE)
    p.add_argument("-o", "--output")

    p = add("algebra-check", cmd_algebra_check, "randomised identity checks of the algebra")
    p.add_argument("--r", type=int, default=4)
    p.add_argument("--trials", type=int, default=1000)

    p = add("study", cmd_study, "refinement study with the O(h^2) ratio table")
    p.add_argument("--surface", required=True, choices=SURFACES)
    p.add_argument("--grids", default="32,64,128,256")
    p.add_argument("--check", required=True, choices=sorted(CHECKS))
    _surface_params(p)
    p.add_argument("--margin", type=float)
    p.add_argument("--aspect", type=float, help="nv / nu (default 0.75 for the Clifford torus, else 1)")
    p.add_argument("--csv")
    return top


def main(argv: list[str] | None = None) -> int:
    try:
        _apply_threads()
        parser = build_parser()
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_usage(sys.stderr)
            return 1
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (FileNotFoundError, PermissionError, IsADirectoryError, json.JSONDecodeError) as exc:
        print(f"cliffsurf: I/O error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        from .errors import CliffsurfError

        if isinstance(exc, CliffsurfError):
            print(f"cliffsurf: check failed: {type(exc).__name__}: {exc}", file=sys.stderr)
            return 2
        if isinstance(exc, ValueError):
            print(f"cliffsurf: invalid input: {exc}", file=sys.stderr)
            return 1
        raise


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
