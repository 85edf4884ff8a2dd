"""Command-line front end.

Every subcommand prints its result to stdout (CSV, whitespace columns or a
JSON report) and optionally renders figures into ``--plot-dir``. Asserted
properties are listed in the output with their thresholds.

Exit codes: 0 all asserted properties hold, 1 an assertion failed, 2 usage
or input error, 3 solver failure. Errors are a single JSON line on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, fields
from dataclasses import field as dc_field
from pathlib import Path
from typing import Any

import numpy as np

from . import ballmode, io, plotting
from .errors import SolverError, SpectralGapError
from .fdsolver import (
    EigenPair,
    GridDomain,
    ScalarField,
    boundary_fit,
    lowest_eigenvalues,
    principal_eigenpair,
    rayleigh_quotient,
    sample_field,
)
from .rearrange import (
    distribution_function,
    polya_szego_check,
    schwarz,
    sharp,
    talenti_compare,
    talenti_dagger,
)
from .reduction import (
    boundary_alpha,
    check_criticality,
    check_hypothesis_M,
    check_nodal_volume,
    check_overdetermined,
    check_zero_laplacian_trace,
    energy,
    reduce,
    variational_quotient,
)
from .shapederiv import (
    G_derivative_check,
    boundary_constancy_scan,
    eigenvalue_derivative_check,
    parse_field,
    translation_check,
    volume_derivative,
)
from .specialfn import gamma_nu

__all__ = ["main", "RunConfig", "EXIT_OK", "EXIT_ASSERT", "EXIT_USAGE", "EXIT_SOLVER"]

EXIT_OK, EXIT_ASSERT, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3
MIN_RESOLUTION = 32
BALL_DIMS = (2, 12)


class UsageError(Exception):
    """Bad arguments or unreadable input."""


@dataclass
class Tolerances:
    """Pass/fail thresholds. Entries ending in ``_h`` are multiples of the
    grid spacing and relative to the quantity's natural scale."""

    mean_consistency: float = 1e-8
    rayleigh_rel: float = 1e-8
    residual_pde: float = 1e-6
    quotient_rel: float = 1e-8
    energy_rel: float = 1e-8
    criticality_h: float = 10.0
    hypothesis_M_h: float = 10.0
    zero_trace_ratio: float = 0.1
    polya_szego_h: float = 10.0
    talenti_h: float = 10.0
    g_derivative_h: float = 20.0
    scaling_rel: float = 1e-6
    dilation_rel: float = 0.01
    bump_rel: float = 0.10
    bump_h: float = 10.0
    corner_h: float = 10.0
    volume_dilation_rel: float = 0.02
    volume_bump_rel: float = 0.05
    volume_bump_h: float = 20.0
    preservation_rel: float = 1e-12


@dataclass
class RunConfig:
    """Merged settings: built-in defaults, then ``--config`` file, then flags."""

    subcommand: str | None = None
    domain: str | None = None
    resolution: int | None = None
    d: int = 2
    dims: str = "4..9"
    volume: float = 1.0
    points: int = 201
    quantity: str = "u"
    tol: float = 1e-12
    delta_factor: float = 4.0
    field: str | None = None
    vector_field: str = "dilation"
    mode: str = "schwarz"
    source: str = "uniform"
    exact_g: bool = False
    seed: int = 0
    out: str | None = None
    plot_dir: str | None = None
    tolerances: Tolerances = dc_field(default_factory=Tolerances)

    def to_dict(self) -> dict:
        return asdict(self)


# reporting ----------------------------------------------------------------------
class Checks:
    """Collected property checks; unasserted entries are informational."""

    def __init__(self):
        self.items: list[dict] = []

    def add(self, name: str, value, threshold, passed, asserted: bool = True, note: str = ""):
        item = {"name": name, "value": value, "threshold": threshold,
                "asserted": bool(asserted), "passed": None if passed is None else bool(passed)}
        if note:
            item["note"] = note
        self.items.append(item)

    @property
    def failures(self) -> list[str]:
        return [c["name"] for c in self.items if c["asserted"] and not c["passed"]]


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return str(x)
        # ten digits keep reports stable across BLAS rounding differences
        return float(f"{x:.10g}")
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def _emit_json(doc: dict, dest=None) -> None:
    text = json.dumps(_clean(doc), indent=2) + "\n"
    if dest in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(dest).write_text(text, encoding="utf-8")


def _error_line(kind: str, message: str, **extra) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message, **_clean(extra)}) + "\n")


def _finish(checks: Checks) -> int:
    fails = checks.failures
    if fails:
        _error_line("assertion", f"{len(fails)} asserted propert{'y' if len(fails) == 1 else 'ies'} failed",
                    failed=fails)
        return EXIT_ASSERT
    return EXIT_OK


def _plot_path(cfg: RunConfig, name: str) -> Path | None:
    return None if cfg.plot_dir is None else Path(cfg.plot_dir) / name


# input helpers --------------------------------------------------------------------
def parse_dims(text: str) -> list[int]:
    """``4..9``, ``4,6,8`` or ``5``."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            dims = list(range(int(lo), int(hi) + 1))
        else:
            dims = [int(t) for t in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse dimensions {text!r}") from None
    if not dims or min(dims) < BALL_DIMS[0] or max(dims) > BALL_DIMS[1]:
        raise UsageError(f"dimensions must lie in {BALL_DIMS[0]}..{BALL_DIMS[1]}")
    return dims


def _load_domain(cfg: RunConfig) -> tuple[dict, GridDomain]:
    if cfg.domain is None:
        raise UsageError("--domain is required")
    try:
        spec = io.load_domain_spec(cfg.domain)
    except FileNotFoundError:
        raise UsageError(f"domain spec not found: {cfg.domain}") from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    res = cfg.resolution if cfg.resolution is not None else spec.get("resolution")
    if spec["shape"] != "mask" and (res is None or res < MIN_RESOLUTION):
        raise UsageError(f"resolution must be at least {MIN_RESOLUTION}")
    return spec, io.domain_from_spec(spec, res if spec["shape"] != "mask" else None)


def _disk_radius(spec: dict) -> float | None:
    return float(spec["params"][0]) if spec["shape"] == "disk" else None


def _solve(cfg: RunConfig, dom: GridDomain) -> EigenPair:
    return principal_eigenpair(dom, tol=cfg.tol)


# subcommands ----------------------------------------------------------------------
def cmd_ball_table(cfg: RunConfig) -> int:
    dims = parse_dims(cfg.dims)
    if cfg.volume <= 0:
        raise UsageError("--volume must be positive")
    checks = Checks()
    rows, means = [], []
    for d in dims:
        mode = ballmode.make_ball_mode(d, cfg.volume)
        forms = ballmode.mean_uB_forms(mode)
        mean = abs(forms.closed_form)
        means.append(mean)
        rows.append((d, mode.nu, mode.gamma, mode.R, mode.eigenvalue, mean, mean**2,
                     abs(forms.quadrature), forms.discrepancy, forms.scaled_discrepancy))
        checks.add(f"mean_closed_vs_quadrature_d{d}", forms.discrepancy,
                   cfg.tolerances.mean_consistency, forms.discrepancy <= cfg.tolerances.mean_consistency)
    io.write_csv(cfg.out, ("d", "nu", "gamma", "R", "eigenvalue", "abs_mean_uB", "abs_mean_uB_sq",
                           "quadrature", "discrepancy", "scaled_form_discrepancy"), rows)
    if (p := _plot_path(cfg, "ball_table.png")) is not None:
        plotting.save_ball_table(dims, means, p)
    return _finish(checks)


def cmd_ball_profile(cfg: RunConfig) -> int:
    if not BALL_DIMS[0] <= cfg.d <= BALL_DIMS[1]:
        raise UsageError(f"--d must lie in {BALL_DIMS[0]}..{BALL_DIMS[1]}")
    if cfg.points < 2:
        raise UsageError("--points must be at least 2")
    if cfg.volume <= 0:
        raise UsageError("--volume must be positive")
    mode = ballmode.make_ball_mode(cfg.d, cfg.volume)
    r = np.linspace(0.0, mode.R, cfg.points)
    # oriented so that the mode has positive mean
    if cfg.quantity == "u":
        vals = -np.asarray(ballmode.eval_u(mode, r))
    elif cfg.quantity == "laplacian":
        vals = -np.asarray(ballmode.eval_laplacian_u(mode, r))
    else:
        raise UsageError("--quantity must be u or laplacian")
    io.write_columns(cfg.out, zip(r, vals), comment=f"r {cfg.quantity} (d={cfg.d}, volume={cfg.volume:g})")
    checks = Checks()
    if cfg.quantity == "u":
        edge = abs(vals[-1]) / np.abs(vals).max()
        checks.add("u_vanishes_at_R", edge, 1e-10, edge <= 1e-10)
    else:
        alpha = ballmode.boundary_alpha(mode)
        rel = abs(abs(vals[-1]) / alpha - 1.0)
        checks.add("laplacian_at_R_equals_alpha", rel, 1e-10, rel <= 1e-10)
    if (p := _plot_path(cfg, f"ball_profile_d{cfg.d}.png")) is not None:
        plotting.save_curves(p, [(r, vals, cfg.quantity)], "r", cfg.quantity, f"ball mode, d={cfg.d}")
    return _finish(checks)


def cmd_solve(cfg: RunConfig) -> int:
    spec, dom = _load_domain(cfg)
    pair = _solve(cfg, dom)
    second = float(lowest_eigenvalues(dom, 2)[1])
    rq = rayleigh_quotient(pair.mode)
    rq_err = abs(rq / pair.eigenvalue - 1.0)
    radius = _disk_radius(spec)
    ball = (gamma_nu(2).gamma / radius) ** 4 if radius else float("nan")
    ball_err = pair.eigenvalue / ball - 1.0 if radius else float("nan")
    io.write_csv(None, ("domain", "h", "nodes", "area", "eigenvalue", "second_eigenvalue",
                        "rayleigh_rel_err", "iterations", "ball_eigenvalue", "rel_err_vs_ball"),
                 [(dom.label, dom.h, dom.n_interior, dom.area, pair.eigenvalue, second, rq_err,
                   pair.iterations, ball if radius else "", ball_err if radius else "")])
    if cfg.out:
        io.write_field_csv(cfg.out, pair.mode)
    checks = Checks()
    checks.add("rayleigh_consistency", rq_err, cfg.tolerances.rayleigh_rel, rq_err <= cfg.tolerances.rayleigh_rel)
    if (p := _plot_path(cfg, "mode.png")) is not None:
        plotting.save_field(pair.mode, p, f"principal mode, eigenvalue {pair.eigenvalue:.6g}")
        plotting.save_boundary_trace(boundary_fit(pair.mode), boundary_alpha(pair.eigenvalue, dom.area),
                                     _plot_path(cfg, "boundary_trace.png"))
    return _finish(checks)


def _reduction_section(cfg: RunConfig, spec: dict, dom: GridDomain, pair: EigenPair, checks: Checks) -> dict:
    tol = cfg.tolerances
    red = reduce(pair, exact_g=cfg.exact_g)
    q = variational_quotient(red.z, red.g, red.z)
    e_val = energy(red.z, red.g, red.mu)
    e_id = math.sqrt(red.mu) * float((red.g.values * red.z.values).sum()) * dom.h**2
    e_rel = abs(e_val - e_id) / max(abs(e_id), 1e-300)
    checks.add("reduced_pde_residual", red.residual_pde, tol.residual_pde, red.residual_pde <= tol.residual_pde)
    checks.add("reduced_prime_residual", red.residual_prime, tol.residual_pde,
               red.residual_prime <= tol.residual_pde)
    harmonic = not cfg.exact_g
    checks.add("quotient_equals_inverse_root", red.residual_quotient, tol.quotient_rel,
               red.residual_quotient <= tol.quotient_rel, asserted=harmonic,
               note="" if harmonic else "constant g leaves z nonzero on the ring")
    checks.add("energy_identity", e_rel, tol.energy_rel, e_rel <= tol.energy_rel, asserted=harmonic)
    checks.add("z_negative_when_g_nonnegative", float(red.z.values[dom.depth > 1].max()), 0.0,
               red.z_negative if red.g_nonnegative else None, asserted=red.g_nonnegative,
               note="" if red.g_nonnegative else "g changes sign; nothing asserted")
    is_disk = spec["shape"] == "disk"
    crit = check_criticality(pair, tol=tol.criticality_h * dom.h)
    checks.add("criticality", crit.max_rel_dev, crit.tolerance, crit.passed, asserted=is_disk)
    over = check_overdetermined(pair, tol=tol.criticality_h * dom.h)
    checks.add("dn_laplacian_constant", max(s.rel_dev for s in over.dn_laplacian), over.tolerance,
               over.constant, asserted=False)
    hm = check_hypothesis_M(pair, tol=tol.hypothesis_M_h * dom.h)
    checks.add("hypothesis_M_equality", hm.rel_gap, hm.tolerance, hm.equality_within_tol, asserted=is_disk)
    checks.add("hypothesis_M", hm.mean_u - hm.mean_uB, 0.0, hm.holds, asserted=False)
    checks.add("mean_bound", hm.mean_u, hm.mean_bound, hm.bound_holds, asserted=is_disk)
    nod = check_nodal_volume(pair)
    zt = check_zero_laplacian_trace(pair, threshold=tol.zero_trace_ratio)
    checks.add("laplacian_trace_nonzero", zt.ratio, zt.threshold, zt.passed)
    return {
        "quotient": q,
        "inverse_root_mu": 1.0 / math.sqrt(red.mu),
        "energy": e_val,
        "energy_identity_rhs": e_id,
        "reduction": red.summary(),
        "criticality": crit.to_dict(),
        "overdetermined": over.to_dict(),
        "hypothesis_M": hm.to_dict(),
        "nodal_volume": nod.to_dict(),
        "zero_laplacian_trace": zt.to_dict(),
        "_red": red,
    }


def cmd_verify_reduction(cfg: RunConfig) -> int:
    spec, dom = _load_domain(cfg)
    pair = _solve(cfg, dom)
    checks = Checks()
    sec = _reduction_section(cfg, spec, dom, pair, checks)
    red = sec.pop("_red")
    _emit_json({"domain": spec, "h": dom.h, "eigenvalue": pair.eigenvalue, **sec, "checks": checks.items,
                "passed": not checks.failures}, cfg.out)
    if (p := _plot_path(cfg, "z.png")) is not None:
        plotting.save_field(red.z, p, "reduced field z")
        plotting.save_field(red.g, _plot_path(cfg, "g.png"), "harmonic part g")
    return _finish(checks)


def _read_field(cfg: RunConfig, dom: GridDomain | None = None) -> ScalarField:
    try:
        return io.read_field_csv(cfg.field, dom)
    except FileNotFoundError:
        raise UsageError(f"field file not found: {cfg.field}") from None
    except (ValueError, KeyError) as exc:
        raise UsageError(str(exc)) from None


def cmd_rearrange(cfg: RunConfig) -> int:
    if cfg.field is None:
        raise UsageError("--field is required")
    dom = _load_domain(cfg)[1] if cfg.domain else None
    f = _read_field(cfg, dom)
    try:
        prof = {"schwarz": schwarz, "sharp": sharp, "dagger": talenti_dagger}[cfg.mode](f)
    except KeyError:
        raise UsageError("--mode must be schwarz, sharp or dagger") from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    io.write_columns(cfg.out, prof.columns(), comment=f"r {cfg.mode}")
    checks = Checks()
    h2 = f.domain.h ** 2
    for p in (1, 2):
        a = float((np.abs(f.values) ** p).sum() * h2)
        b = prof.lp_norm(p) ** p
        rel = abs(a - b) / max(a, 1e-300)
        checks.add(f"L{p}_preserved", rel, cfg.tolerances.preservation_rel, rel <= cfg.tolerances.preservation_rel)
    levels = np.linspace(f.values.min(), f.values.max(), 20)
    mismatch = max(abs(distribution_function(f, t) - float((prof.values > t).sum() * prof.cell)) for t in levels)
    checks.add("equimeasurable", mismatch, 1e-12 * f.domain.area, mismatch <= 1e-12 * f.domain.area)
    if (pp := _plot_path(cfg, f"rearrange_{cfg.mode}.png")) is not None:
        plotting.save_curves(pp, [(prof.radius, prof.values, cfg.mode)], "r", "value")
    return _finish(checks)


def _source(cfg: RunConfig, dom: GridDomain) -> ScalarField:
    if cfg.field:
        return _read_field(cfg, dom)
    if cfg.source == "uniform":
        return sample_field(dom, lambda x, y: np.ones_like(x))
    if cfg.source == "random":
        rng = np.random.default_rng(cfg.seed)
        return ScalarField(dom, rng.random(dom.n_interior))
    raise UsageError("--source must be uniform or random")


def cmd_talenti(cfg: RunConfig) -> int:
    spec, dom = _load_domain(cfg)
    f = _source(cfg, dom)
    try:
        rep = talenti_compare(dom, f, tol=cfg.tolerances.talenti_h * dom.h)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    checks = Checks()
    checks.add("talenti_min_gap", rep.min_gap / rep.max_u, -rep.tolerance, rep.passed)
    _emit_json({"domain": spec, "h": dom.h, "talenti": rep.to_dict(), "checks": checks.items,
                "passed": not checks.failures})
    if cfg.out:
        s = rep.u_star.s
        io.write_columns(cfg.out, zip(rep.u_star.radius, rep.v(s), rep.u_star.values), comment="r v u_star")
    if (p := _plot_path(cfg, "talenti.png")) is not None:
        plotting.save_curves(p, [(rep.v.radius, rep.v.values, "v"), (rep.u_star.radius, rep.u_star.values, "u*")],
                             "r", "value", "symmetrised vs rearranged solution")
    return _finish(checks)


def _shape_section(cfg: RunConfig, spec: dict, dom: GridDomain, pair: EigenPair, text: str,
                   checks: Checks, refuse_ok: bool = False) -> dict:
    tol = cfg.tolerances
    try:
        V = parse_field(text)
    except ValueError as exc:
        raise UsageError(f"vector field {text!r}: {exc}") from None
    delta = cfg.delta_factor * dom.h
    out: dict[str, Any] = {"field": V.label()}
    # boundary traces converge only at O(h) where the boundary has corners
    corners = spec["shape"] in ("square", "mask")
    relax = (lambda t: max(t, tol.corner_h * dom.h)) if corners else (lambda t: t)
    vol = volume_derivative(dom, V, delta)
    out["volume_derivative"] = vol.to_dict()
    vrel = vol.discrepancy / max(abs(vol.exact), 1e-300)
    if V.kind == "dilation":
        vt = relax(tol.volume_dilation_rel)
        checks.add(f"volume_derivative[{V.label()}]", vrel, vt, vrel <= vt)
    elif V.kind == "normal_bump":
        vt = max(tol.volume_bump_rel, tol.volume_bump_h * dom.h)
        checks.add(f"volume_derivative[{V.label()}]", vrel, vt, vrel <= vt)
    if V.kind == "translation":
        tr = translation_check(dom, V, delta)
        out["translation"] = tr.to_dict()
        checks.add(f"translation_invariance[{V.label()}]", tr.slope, 3.0 * tr.stderr, tr.passed)
    else:
        try:
            eig = eigenvalue_derivative_check(dom, V, delta, pair=pair)
        except SpectralGapError as exc:
            if not refuse_ok:
                raise
            eig = None
            out["eigenvalue_derivative"] = {"refused": str(exc)}
            checks.add(f"eigenvalue_derivative[{V.label()}]", None, None, None, asserted=False, note=str(exc))
        if eig is not None:
            out["eigenvalue_derivative"] = eig.to_dict()
            if V.is_origin_dilation:
                # Richardson removes the O(delta^2) Taylor term of the difference
                law = abs(eig.fd_richardson / (-4.0 * pair.eigenvalue) - 1.0)
                checks.add("scaling_law", law, tol.scaling_rel, law <= tol.scaling_rel)
                et = relax(tol.dilation_rel)
            else:
                et = relax(max(tol.bump_rel, tol.bump_h * dom.h))
            checks.add(f"formula_vs_fd[{V.label()}]", eig.relative_discrepancy, et, eig.relative_discrepancy <= et)
    is_disk = spec["shape"] == "disk"
    g = G_derivative_check(dom, V, pair=pair, tol=tol.g_derivative_h * dom.h, assert_zero=is_disk)
    out["G_derivative"] = g.to_dict()
    checks.add(f"G_derivative_zero[{V.label()}]", g.normalized, g.tolerance, g.passed, asserted=is_disk)
    return out


def cmd_shape_deriv(cfg: RunConfig) -> int:
    spec, dom = _load_domain(cfg)
    pair = _solve(cfg, dom)
    checks = Checks()
    sec = _shape_section(cfg, spec, dom, pair, cfg.vector_field, checks)
    _emit_json({"domain": spec, "h": dom.h, "eigenvalue": pair.eigenvalue, **sec, "checks": checks.items,
                "passed": not checks.failures}, cfg.out)
    return _finish(checks)


CHECK_ALL_FIELDS = ("dilation", "translation", "bump:0.7,0.8,1")


def cmd_check_all(cfg: RunConfig) -> int:
    spec, dom = _load_domain(cfg)
    tol = cfg.tolerances
    checks = Checks()
    pair = _solve(cfg, dom)
    lam = lowest_eigenvalues(dom, 2)
    rq_err = abs(rayleigh_quotient(pair.mode) / pair.eigenvalue - 1.0)
    checks.add("rayleigh_consistency", rq_err, tol.rayleigh_rel, rq_err <= tol.rayleigh_rel)
    checks.add("eigenvalue_positive", pair.eigenvalue, 0.0, pair.eigenvalue > 0)
    doc: dict[str, Any] = {"domain": spec, "h": dom.h, "nodes": dom.n_interior, "area": dom.area,
                           "boundary_components": dom.n_boundary_components,
                           "eigenvalue": pair.eigenvalue, "second_eigenvalue": float(lam[1])}
    radius = _disk_radius(spec)
    if radius:
        ball = (gamma_nu(2).gamma / radius) ** 4
        doc["ball_eigenvalue"] = ball
        doc["rel_err_vs_ball"] = pair.eigenvalue / ball - 1.0
    sec = _reduction_section(cfg, spec, dom, pair, checks)
    red = sec.pop("_red")
    doc.update(sec)
    doc["boundary_constancy"] = boundary_constancy_scan(pair).to_dict()
    ps = polya_szego_check(red.z, tol=tol.polya_szego_h * dom.h)
    doc["polya_szego"] = ps.to_dict()
    checks.add("polya_szego", ps.lhs / ps.rhs - 1.0 if ps.rhs else 0.0, -ps.tolerance, ps.passed)
    tal = talenti_compare(dom, sample_field(dom, lambda x, y: np.ones_like(x)), tol=tol.talenti_h * dom.h)
    doc["talenti_uniform_source"] = tal.to_dict()
    checks.add("talenti_min_gap", tal.min_gap / tal.max_u, -tal.tolerance, tal.passed)
    doc["shape_derivatives"] = [_shape_section(cfg, spec, dom, pair, t, checks, refuse_ok=True)
                                 for t in CHECK_ALL_FIELDS]
    doc["checks"] = checks.items
    doc["passed"] = not checks.failures
    _emit_json(doc, cfg.out)
    if (p := _plot_path(cfg, "mode.png")) is not None:
        plotting.save_field(pair.mode, p, f"principal mode, eigenvalue {pair.eigenvalue:.6g}")
        plotting.save_boundary_trace(boundary_fit(pair.mode), boundary_alpha(pair.eigenvalue, dom.area),
                                     _plot_path(cfg, "boundary_trace.png"))
        plotting.save_field(red.z, _plot_path(cfg, "z.png"), "reduced field z")
    return _finish(checks)


COMMANDS = {
    "ball-table": cmd_ball_table,
    "ball-profile": cmd_ball_profile,
    "solve": cmd_solve,
    "verify-reduction": cmd_verify_reduction,
    "rearrange": cmd_rearrange,
    "talenti": cmd_talenti,
    "shape-deriv": cmd_shape_deriv,
    "check-all": cmd_check_all,
}


# argument parsing -----------------------------------------------------------------
class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--plot-dir", dest="plot_dir", help="directory for PNG figures")
    common.add_argument("--config", help="JSON file of settings; flags take precedence")
    common.add_argument("--print-config", dest="print_config", action="store_true",
                        help="print the merged settings and exit")

    grid = _Parser(add_help=False)
    grid.add_argument("--domain", help='JSON domain spec {"shape", "params", "resolution"}')
    grid.add_argument("--resolution", type=int, help=f"override the domain file resolution (>= {MIN_RESOLUTION})")
    grid.add_argument("--tol", type=float, help="eigen-iteration tolerance")

    p = _Parser(prog="clampedplate", description="Clamped-plate eigenmodes: ball closed forms, grid "
                "solves and property checks.", parents=[common])
    sub = p.add_subparsers(dest="subcommand", parser_class=_Parser)

    s = sub.add_parser("ball-table", parents=[common], help="ball mean values for a range of dimensions")
    s.add_argument("--dims", help="e.g. 4..9 or 4,6,8")
    s.add_argument("--volume", type=float)

    s = sub.add_parser("ball-profile", parents=[common], help="radial profile of the ball mode")
    s.add_argument("--d", type=int)
    s.add_argument("--volume", type=float)
    s.add_argument("--points", type=int)
    s.add_argument("--quantity", choices=("u", "laplacian"))

    sub.add_parser("solve", parents=[common, grid], help="principal eigenpair on a grid domain")

    s = sub.add_parser("verify-reduction", parents=[common, grid], help="order reduction and hypothesis checks")
    s.add_argument("--exact-g", dest="exact_g", action="store_true", default=None,
                   help="use the constant critical-shape value for g")

    s = sub.add_parser("rearrange", parents=[common], help="rearrange a field CSV")
    s.add_argument("--field", help="field CSV (index,x,y,value)")
    s.add_argument("--mode", choices=("schwarz", "sharp", "dagger"))
    s.add_argument("--domain", help="optional domain spec the field lives on")
    s.add_argument("--resolution", type=int)

    s = sub.add_parser("talenti", parents=[common, grid], help="Talenti comparison for a Poisson source")
    s.add_argument("--f", dest="field", help="source field CSV (default: --source)")
    s.add_argument("--source", choices=("uniform", "random"))
    s.add_argument("--seed", type=int)

    s = sub.add_parser("shape-deriv", parents=[common, grid], help="shape-derivative checks")
    s.add_argument("--field", dest="vector_field", help="dilation | translation[:vx,vy] | bump:theta,w,a")
    s.add_argument("--delta-factor", dest="delta_factor", type=float, help="finite-difference step in units of h")

    sub.add_parser("check-all", parents=[common, grid], help="run every checker on one domain")
    return p


def _merge(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    names = {f.name for f in fields(RunConfig)} - {"tolerances"}
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"config file {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        for key, val in data.items():
            if key == "tolerances":
                for tk, tv in val.items():
                    if not hasattr(cfg.tolerances, tk):
                        raise UsageError(f"unknown tolerance {tk!r}")
                    setattr(cfg.tolerances, tk, float(tv))
            elif key in names:
                setattr(cfg, key, val)
            else:
                raise UsageError(f"unknown config key {key!r}")
    for key in names:
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    return cfg


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    if not argv:
        parser.print_help(sys.stdout)
        _error_line("usage", "no subcommand given")
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
        cfg = _merge(args)
        if args.print_config:
            _emit_json(cfg.to_dict())
            return EXIT_OK
        if cfg.subcommand is None:
            raise UsageError("no subcommand given")
        return COMMANDS[cfg.subcommand](cfg)
    except UsageError as exc:
        _error_line("usage", str(exc))
        return EXIT_USAGE
    except SpectralGapError as exc:
        _error_line("spectral_gap", str(exc))
        return EXIT_SOLVER
    except (SolverError, ArithmeticError, np.linalg.LinAlgError) as exc:
        _error_line("solver", str(exc))
        return EXIT_SOLVER
    except BrokenPipeError:
        # downstream reader closed early (e.g. ``| head``)
        sys.stdout = open(os.devnull, "w")
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
