"""Command-line interface: gen, energy, check, transform, spectrum.

Exit codes: 0 success, 2 validation failure, 3 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from .constructions import dirac_potential
from .invariants import QuadratureError
from .mesh import FAMILIES, SpecError, SurfaceSpec, build_mesh, build_surface, ends_sidecar, export
from .spectral import (AknsProblem, SpectralError, akns_bound_states, potential_from_csv, trace_integral)
from .surface import chart_samples, hopf_type_residuals, hopf_data, sphere_residuals
from .transforms import TransformError, backlund2, bryant_darboux_pair, classify_darboux

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3
log = logging.getLogger("solitonsphere")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    return str(o)


def _emit(data, path=None):
    text = json.dumps(data, indent=2, default=_json_default)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def parse_value(text: str):
    """JSON if possible (numbers, lists), else a complex literal such as 0.72i, else the string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    try:
        z = complex(text.replace("i", "j"))
        return [z.real, z.imag]
    except ValueError:
        return text


def _extra_params(tokens):
    params, key = {}, None
    for tok in tokens:
        if tok.startswith("--"):
            if key is not None:
                params[key] = True
            key = tok[2:].replace("-", "_")
            if "=" in key:
                key, val = key.split("=", 1)
                params[key] = parse_value(val)
                key = None
        elif key is None:
            raise SpecError(f"unexpected argument {tok!r}")
        else:
            params[key] = parse_value(tok)
            key = None
    if key is not None:
        params[key] = True
    return params


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args, extra) -> int:
    spec = SurfaceSpec(args.family, _extra_params(extra), {"res": args.res, "polar": args.polar})
    spec.validate()
    result = build_mesh(spec)
    if args.out:
        export(result.mesh, args.out, args.format)
        if result.mesh.ends:
            _emit(ends_sidecar(result.mesh), str(args.out) + ".ends.json")
    if args.spec_out:
        spec.dump(args.spec_out)
    _emit(result.report, args.report)
    return EXIT_OK if result.ok else EXIT_INVALID


def cmd_energy(args, extra) -> int:
    spec = SurfaceSpec.load(args.spec)
    result = build_mesh(spec, with_mesh=False)
    keys = ("W", "W_over_4pi", "quantization", "energy_routes", "branch_points")
    _emit({k: result.report[k] for k in keys}, args.report)
    return EXIT_OK if "quantization" not in result.report["failures"] else EXIT_INVALID


def cmd_check(args, extra) -> int:
    spec = SurfaceSpec.load(args.spec)
    result = build_mesh(spec, with_mesh=False)
    s = build_surface(spec).surface
    inv = {}
    if spec.family not in ("dirac_sphere", "taimanov", "backlund_of"):
        pts = chart_samples(args.samples // 2, 0)
        sph = {"S2": 0.0, "fixes_point": 0.0}
        hop = {}
        for chart, z in pts:
            with np.errstate(all="ignore"):
                r = sphere_residuals(s, z, chart)
                h = hopf_type_residuals(hopf_data(s, z, chart))
            for k in sph:
                sph[k] = max(sph[k], float(np.nanmax(r[k])))
            for k, v in h.items():
                hop[k] = max(hop.get(k, 0.0), float(np.nanmax(v)))
        inv = {"sphere": sph, "hopf_types": hop}
    report = dict(result.report)
    report["invariants"] = inv
    _emit(report, args.report)
    return EXIT_OK if result.ok else EXIT_INVALID


def cmd_transform(args, extra) -> int:
    spec = SurfaceSpec.load(args.spec)
    if args.kind == "darboux":
        new = SurfaceSpec("darboux_of", {"of": spec.to_json()}, spec.sampling)
        new.validate()
        pair = bryant_darboux_pair(build_surface(spec).extra["curve"])
        report = {"compatibility": pair.compatibility_residual(), "identities": pair.identity_residuals(),
                  "classification": classify_darboux(pair)}
    elif args.kind == "backlund1":
        new = SurfaceSpec("backlund_of", {"of": spec.to_json(), "kind": "backlund1"}, spec.sampling)
        g = build_surface(new).surface
        report = {"closedness": g.meta.get("closedness"), "constant": bool(g.meta.get("constant", False))}
    else:
        s = build_surface(spec).surface
        out = {}
        for d in ("forward", "backward"):
            r = backlund2(s, d)
            out[d] = {"defined": r.defined, "spread": r.spread, "constant": r.is_constant(),
                      "point": (str(r.point()) if r.is_constant() else None)}
        _emit({"spec": spec.to_json(), "backlund2": out}, args.report)
        return EXIT_OK if any(v["defined"] for v in out.values()) else EXIT_INVALID
    if args.out:
        new.dump(args.out)
    _emit({"spec": new.to_json(), "report": report}, args.report)
    return EXIT_OK


def _potential(arg: str):
    kind, _, value = arg.partition(":")
    if kind == "dirac":
        N = int(value)
        return dirac_potential(N), N + 1.0
    if kind == "csv":
        return potential_from_csv(value), None
    raise SpecError("--potential is dirac:N or csv:FILE")


def cmd_spectrum(args, extra) -> int:
    U, kmax = _potential(args.potential)
    kmax = args.kappa_max or kmax
    if kmax is None:
        raise SpecError("--kappa-max is required for CSV potentials")
    states = akns_bound_states(AknsProblem(U), kmax)
    _emit({"kappas": [s.kappa for s in states], "n": [s.n for s in states],
           "residuals": [s.residual for s in states], "trace": trace_integral(U),
           "states": [s.to_json() for s in states] if args.full else None}, args.report)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="solitonsphere", description="Soliton spheres: meshes, energies, transforms.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", allow_abbrev=False, help="build a surface, export a mesh and a report; family parameters as --key value")
    g.add_argument("family", choices=FAMILIES)
    g.add_argument("--out", help="mesh file (.obj or .ply)")
    g.add_argument("--format", choices=("obj", "ply"))
    g.add_argument("--report", help="JSON report path (stdout if omitted)")
    g.add_argument("--res", type=int, default=64)
    g.add_argument("--polar", action="store_true", help="log-polar sampling")
    g.add_argument("--spec-out", help="write the surface spec JSON")
    g.set_defaults(fn=cmd_gen)

    for name, fn, helptext in (("energy", cmd_energy, "Willmore energy report"),
                               ("check", cmd_check, "residual and invariant report")):
        c = sub.add_parser(name, help=helptext)
        c.add_argument("--spec", required=True)
        c.add_argument("--report")
        c.add_argument("--samples", type=int, default=200)
        c.set_defaults(fn=fn)

    t = sub.add_parser("transform", help="Darboux or Backlund transform of a spec")
    t.add_argument("kind", choices=("darboux", "backlund1", "backlund2"))
    t.add_argument("--spec", required=True)
    t.add_argument("--out", help="write the transformed surface spec")
    t.add_argument("--report")
    t.set_defaults(fn=cmd_transform)

    s = sub.add_parser("spectrum", help="ZS-AKNS bound states of a potential")
    s.add_argument("--potential", required=True, help="dirac:N or csv:FILE")
    s.add_argument("--kappa-max", type=float)
    s.add_argument("--full", action="store_true", help="include eigenfunction samples")
    s.add_argument("--report")
    s.set_defaults(fn=cmd_spectrum)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if extra and args.command != "gen":
        parser.error(f"unrecognized arguments: {' '.join(extra)}")
    try:
        return args.fn(args, extra)
    except (SpecError, TransformError, ValueError, KeyError, OSError) as e:
        if isinstance(e, OSError) and not isinstance(e, FileNotFoundError):
            raise
        log.error("%s: %s", type(e).__module__ + "." + type(e).__name__, e)
        return EXIT_INVALID
    except (QuadratureError, SpectralError, np.linalg.LinAlgError) as e:
        log.error("%s: %s", type(e).__module__ + "." + type(e).__name__, e)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
