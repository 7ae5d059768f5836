"""Batch command-line front end.

Exit codes: 0 success (finite / member), 1 infeasible or outside the
polytope (or a failed ``check suite``), 2 input validation error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__, oracle
from .checks import run_suite
from .conjugate import alpha_star, h_full, h_v, legendre_check
from .deformations import Deformation, is_self_dual
from .errors import DefExpError, InputError, NumericalFailure, ValidationError
from .family import PhiExponentialFamily
from .output import to_csv, to_json

SCHEMA_VERSION = "1"

EXIT_OK, EXIT_OUTSIDE, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def parse_vector(text: str, name: str) -> np.ndarray:
    try:
        vals = [float(x) for x in text.replace(" ", "").split(",") if x != ""]
    except ValueError:
        raise InputError(f"could not parse {text!r} as comma-separated numbers", path=name) from None
    if not vals:
        raise InputError("empty vector", path=name)
    return np.array(vals)


def load_json(path: str) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read model file: {exc.strerror}", path=path) from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON: {exc.msg} at line {exc.lineno}", path=path) from None


def load_family(args) -> PhiExponentialFamily:
    return PhiExponentialFamily.from_json(load_json(args.model))


def _direction(fam: PhiExponentialFamily, text: str | None, name: str) -> np.ndarray:
    """``--v 1`` selects a centred statistic, ``--v 1,0,-1`` is an inline vector."""
    if text is None:
        raise InputError(f"--{name} is required", path=name)
    if "," not in text:
        try:
            j = int(text)
        except ValueError:
            j = None
        if j is not None:
            if not 0 <= j < fam.m:
                raise InputError(f"statistic index {j} out of range 0..{fam.m - 1}", path=name)
            return np.array(fam.basis[j])
    return fam.space.variable(parse_vector(text, name), name)


def _theta(fam, args) -> np.ndarray:
    if args.theta is None:
        return np.zeros(fam.m)
    theta = parse_vector(args.theta, "theta")
    if theta.size == 1 and fam.m > 1:
        raise InputError(f"theta must have {fam.m} components", path="theta")
    return theta


# -- command implementations -------------------------------------------------------

def cmd_deform_eval(args):
    obj = load_json(args.model)
    if isinstance(obj, dict) and "deformation" in obj:
        obj = obj["deformation"]
    d = Deformation.from_json(obj)
    out: dict[str, Any] = {"deformation": d.to_json()}
    if args.u is not None:
        u = parse_vector(args.u, "u")
        out.update(u=u, psi=d.psi(u), exp_phi=d.exp_phi(u), exp_phi_d1=d.exp_phi_d1(u),
                   exp_phi_d2=d.exp_phi_d2(u))
    if args.v is not None:
        v = parse_vector(args.v, "v")
        out.update(v=v, phi=d.phi(v), ln_phi=d.ln_phi(v))
    sd = is_self_dual(d, np.linspace(-10.0, 10.0, 41), 1e-10)
    out.update(self_dual=sd.holds, self_dual_deviation=sd.max_deviation)
    return out, EXIT_OK


def cmd_family_alpha(args):
    fam = load_family(args)
    theta = _theta(fam, args)
    return {"alpha": fam.alpha(theta)}, EXIT_OK


def cmd_family_density(args):
    fam = load_family(args)
    theta = _theta(fam, args)
    return {"theta": theta, "density": fam.density(theta)}, EXIT_OK


def cmd_family_escort(args):
    fam = load_family(args)
    theta = _theta(fam, args)
    return {"theta": theta, "escort": fam.escort_theta(theta)}, EXIT_OK


def cmd_family_dk(args):
    fam = load_family(args)
    theta = _theta(fam, args)
    u = fam.u_of(theta)
    v = _direction(fam, args.v, "v")
    return {"theta": theta, "K": fam.K(u), "dK": fam.dK(u, v)}, EXIT_OK


def cmd_family_d2k(args):
    fam = load_family(args)
    theta = _theta(fam, args)
    u = fam.u_of(theta)
    v = _direction(fam, args.v, "v")
    w = _direction(fam, args.w if args.w is not None else args.v, "w")
    return {"theta": theta, "d2K": fam.d2K(u, v, w)}, EXIT_OK


def cmd_family_divergence(args):
    fam = load_family(args)
    if args.q is not None:
        q = parse_vector(args.q, "q")
        return {"q": q, "divergence": fam.divergence(q)}, EXIT_OK
    theta = _theta(fam, args)
    q = fam.density(theta)
    _, K = fam.theta_to_u(theta)
    return {"theta": theta, "divergence": fam.divergence(q), "K": K}, EXIT_OK


def _eta(args) -> np.ndarray:
    if args.eta is None:
        raise InputError("--eta is required", path="eta")
    return parse_vector(args.eta, "eta")


def cmd_polytope_contains(args):
    fam = load_family(args)
    mem = fam.polytope.contains(_eta(args))
    return mem.to_json(), EXIT_OK if mem.member else EXIT_OUTSIDE


def cmd_polytope_interior(args):
    fam = load_family(args)
    eta = _eta(args)
    res = fam.polytope.relative_interior_contains(eta)
    member = fam.polytope.contains(eta).member
    return {"member": member, "relative_interior": res.inside, "slack": res.slack}, \
        EXIT_OK if member else EXIT_OUTSIDE


def _conjugate_exit(res) -> int:
    return EXIT_OK if res.finite else EXIT_OUTSIDE


def cmd_conjugate_alpha_star(args):
    fam = load_family(args)
    res = alpha_star(fam, _eta(args))
    return res.to_json(), _conjugate_exit(res)


def cmd_conjugate_legendre(args):
    fam = load_family(args)
    rep = legendre_check(fam, _theta(fam, args))
    return rep.to_json(), EXIT_OK if rep.ok else EXIT_NUMERICAL


def cmd_conjugate_hv(args):
    fam = load_family(args)
    if args.u_star is None:
        raise InputError("--u-star is required", path="u_star")
    u_star = parse_vector(args.u_star, "u_star")
    res = (h_full if args.full else h_v)(fam, u_star)
    return res.to_json(), _conjugate_exit(res)


def cmd_check_suite(args):
    seed = int(os.environ.get("DEFEXP_SEED", oracle.DEFAULT_SEED))
    results = run_suite(seed)
    groups = {}
    ok = True
    for name, checks in results.items():
        groups[name] = [{"check": c, "passed": p, "detail": d} for c, p, d in checks]
        ok &= all(p for _, p, _ in checks)
    return {"seed": seed, "passed": ok, "groups": groups}, EXIT_OK if ok else EXIT_OUTSIDE


def cmd_oracle_values(args):
    config = oracle.OracleConfig.from_env()
    out = Path(args.out or "fixtures/derived_values.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    values = oracle.write_derived_values(out, config)
    return {"written": str(out), "entries": len(values)}, EXIT_OK


# -- parser -------------------------------------------------------------------------

def _io_options(p: argparse.ArgumentParser, model: bool = True) -> None:
    if model:
        p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="defexp", description="Deformed exponential families on finite spaces.")
    parser.add_argument("--version", action="version",
                        version=f"defexp {__version__} (schema {SCHEMA_VERSION})")
    top = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)

    deform = top.add_parser("deform").add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = deform.add_parser("eval", help="evaluate phi, psi, ln_phi, exp_phi and derivatives")
    _io_options(p)
    p.add_argument("--u", help="points for psi/exp_phi, comma separated")
    p.add_argument("--v", help="positive points for phi/ln_phi, comma separated")
    p.set_defaults(func=cmd_deform_eval)

    family = top.add_parser("family").add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, func in [("alpha", cmd_family_alpha), ("density", cmd_family_density),
                       ("escort", cmd_family_escort), ("dk", cmd_family_dk), ("d2k", cmd_family_d2k),
                       ("divergence", cmd_family_divergence)]:
        p = family.add_parser(name)
        _io_options(p)
        p.add_argument("--theta", help="natural parameter, comma separated (default 0)")
        if name in ("dk", "d2k"):
            p.add_argument("--v", help="statistic index or inline vector")
        if name == "d2k":
            p.add_argument("--w", help="statistic index or inline vector (default: --v)")
        if name == "divergence":
            p.add_argument("--q", help="density w.r.t. mu; default: density(theta)")
        p.set_defaults(func=func)

    poly = top.add_parser("polytope").add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, func in [("contains", cmd_polytope_contains), ("interior", cmd_polytope_interior)]:
        p = poly.add_parser(name)
        _io_options(p)
        p.add_argument("--eta")
        p.set_defaults(func=func)

    conj = top.add_parser("conjugate").add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = conj.add_parser("alpha-star")
    _io_options(p)
    p.add_argument("--eta")
    p.set_defaults(func=cmd_conjugate_alpha_star)
    p = conj.add_parser("legendre-check")
    _io_options(p)
    p.add_argument("--theta")
    p.set_defaults(func=cmd_conjugate_legendre)
    p = conj.add_parser("hv")
    _io_options(p)
    p.add_argument("--u-star", dest="u_star")
    p.add_argument("--full", action="store_true", help="conjugate over all of L_0(p)")
    p.set_defaults(func=cmd_conjugate_hv)

    check = top.add_parser("check").add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = check.add_parser("suite", help="run the built-in property checks")
    _io_options(p, model=False)
    p.set_defaults(func=cmd_check_suite)

    p = top.add_parser("oracle-values", help="regenerate the oracle fixture file")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="fixture path (default fixtures/derived_values.json)")
    p.set_defaults(func=cmd_oracle_values, fixture_out=True)
    return parser


def _emit(payload: Any, fmt: str, out: str | None) -> None:
    text = to_csv(payload) if fmt == "csv" else to_json(payload) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    fmt = args.format
    out = None if getattr(args, "fixture_out", False) else args.out
    try:
        with np.errstate(all="ignore"):
            payload, code = args.func(args)
    except NumericalFailure as exc:
        payload, code = {"error": exc.to_dict()}, EXIT_NUMERICAL
    except DefExpError as exc:
        payload, code = {"error": exc.to_dict()}, EXIT_INPUT
    _emit(payload, fmt, out)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
