"""Configuration ingestion, scenario execution, and artifact emission.

A run is driven by a single YAML file (see configs/ for commented
examples).  ``multiscat run config.yaml`` writes

* ``report.json``    - the full verification report (complex numbers as
  [re, im] pairs, every numerics parameter echoed),
* ``summary.csv``    - one fixed-schema row (schema_version column),
* ``plotdata/*.csv`` - Y_alpha vs alpha, X_0 vs eps with the extrapolated
  value, and the structure-constant truncation sweep,

and exits 0 exactly when every enabled comparison passed its configured
tolerance.  Identical configs produce byte-identical summary.csv files:
there is no randomness anywhere in a run and reduction orders are fixed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from multiscat.greens import structure_constants
from multiscat.multiscatter import Numerics, Scenario, ScenarioEngine
from multiscat.potentials import KINDS, Potential, Scatterer

log = logging.getLogger("multiscat")

SUMMARY_SCHEMA_VERSION = 1

SUMMARY_COLUMNS = [
    "schema_version", "k0", "n_scatterers", "pair_gap",
    "x0_direct_re", "x0_direct_im", "x0_direct_err",
    "x0_structconst_re", "x0_structconst_im", "onshell_rel_diff",
    "phase_law_max", "alpha_flatness", "y_average_rel_diff",
    "born1_abs", "born2_abs", "born3_abs",
    "schatten4", "schatten4_delta", "passed",
]


class ConfigError(ValueError):
    """Aggregated configuration problems; .errors lists (field_path, message)."""

    def __init__(self, errors):
        self.errors = list(errors)
        lines = "\n".join(f"  {path}: {msg}" for path, msg in self.errors)
        super().__init__(f"invalid configuration:\n{lines}")


@dataclass
class RunConfig:
    scenario: Scenario
    output_dir: Path
    formats: tuple = ("json", "csv", "plotdata")
    warnings: list = field(default_factory=list)


def _get(d, path, default=None):
    cur = d
    for part in path.split("."):
        if not isinstance(cur, dict) or part not in cur:
            return default
        cur = cur[part]
    return cur


def validate_config(text: str) -> RunConfig:
    """Parse and validate a YAML config, reporting every violation at once."""
    errors: list = []
    warnings: list = []
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([("<file>", f"not parseable as YAML: {exc}")])
    if not isinstance(raw, dict):
        raise ConfigError([("<file>", "top level must be a mapping")])

    k0 = _get(raw, "scenario.k0")
    if not isinstance(k0, (int, float)) or k0 <= 0:
        errors.append(("scenario.k0", f"must be a positive number, got {k0!r}"))

    def direction(name, default):
        v = _get(raw, f"scenario.{name}", default)
        arr = None
        if (not isinstance(v, (list, tuple)) or len(v) != 3
                or not all(isinstance(x, (int, float)) for x in v)):
            errors.append((f"scenario.{name}", f"must be a 3-vector, got {v!r}"))
        else:
            arr = np.asarray(v, dtype=float)
            n = np.linalg.norm(arr)
            if n == 0:
                errors.append((f"scenario.{name}", "must be nonzero"))
                arr = None
            elif abs(n - 1.0) > 1e-9:
                warnings.append(f"scenario.{name} was not unit length "
                                f"(|v| = {n:.6g}); normalised")
                arr = arr / n
        return arr

    dir_in = direction("dir_in", [0.0, 0.0, 1.0])
    dir_out = direction("dir_out", [0.0, 0.0, 1.0])

    for name in ("eps_list", "alpha_list"):
        v = _get(raw, f"scenario.{name}")
        if v is not None and (not isinstance(v, list)
                              or not all(isinstance(x, (int, float)) for x in v)):
            errors.append((f"scenario.{name}", "must be a list of numbers"))

    scatterers = []
    raw_scat = raw.get("scatterers")
    if not isinstance(raw_scat, list) or len(raw_scat) < 1:
        errors.append(("scatterers", "need a list with at least one scatterer"))
        raw_scat = []
    for i, s in enumerate(raw_scat):
        base = f"scatterers[{i}]"
        center = s.get("center") if isinstance(s, dict) else None
        if (not isinstance(center, (list, tuple)) or len(center) != 3
                or not all(isinstance(x, (int, float)) for x in center)):
            errors.append((f"{base}.center", f"must be a 3-vector, got {center!r}"))
            center = (0.0, 0.0, 0.0)
        pot = s.get("potential") if isinstance(s, dict) else None
        if not isinstance(pot, dict):
            errors.append((f"{base}.potential", "must be a mapping"))
            continue
        kind = pot.get("kind")
        if kind not in KINDS:
            errors.append((f"{base}.potential.kind",
                           f"must be one of {KINDS}, got {kind!r}"))
            continue
        v0 = pot.get("v0")
        a = pot.get("a")
        rc = pot.get("rc")
        if not isinstance(v0, (int, float)):
            errors.append((f"{base}.potential.v0", "must be a number"))
            continue
        if not isinstance(a, (int, float)) or a <= 0:
            errors.append((f"{base}.potential.a", "must be a positive number"))
            continue
        if kind == "truncated_coulomb" and (not isinstance(rc, (int, float)) or rc <= 0):
            errors.append((f"{base}.potential.rc",
                           "truncated_coulomb needs a positive rc"))
            continue
        scatterers.append(Scatterer(tuple(float(x) for x in center),
                                    Potential(kind, float(v0), float(a),
                                              float(rc) if rc is not None else None)))

    num_kwargs = {}
    for key, caster, check in (
            ("lmax", int, lambda v: 0 <= v <= 30),
            ("p_max", float, lambda v: v > 0),
            ("n_inner", int, lambda v: 8 <= v <= 512),
            ("n_mid", int, lambda v: 8 <= v <= 512),
            ("n_outer", int, lambda v: 16 <= v <= 4096),
            ("angular_pad", int, lambda v: 0 <= v <= 400),
            ("n_max", int, lambda v: 1 <= v <= 3),
            ("tail_tol", float, lambda v: v > 0),
            ("schatten_radial", int, lambda v: 4 <= v <= 64),
            ("schatten_order", int, lambda v: 2 <= v <= 40)):
        v = _get(raw, f"numerics.{key}")
        if v is None:
            continue
        if not isinstance(v, (int, float)) or not check(caster(v)):
            errors.append((f"numerics.{key}", f"out of range or wrong type: {v!r}"))
        else:
            num_kwargs[key] = caster(v)

    tolerances = dict(Numerics().tolerances)
    raw_tol = raw.get("tolerances", {})
    if not isinstance(raw_tol, dict):
        errors.append(("tolerances", "must be a mapping"))
    else:
        for k, v in raw_tol.items():
            if k not in tolerances:
                errors.append((f"tolerances.{k}",
                               f"unknown tolerance; known: {sorted(tolerances)}"))
            elif not isinstance(v, (int, float)) or v <= 0:
                errors.append((f"tolerances.{k}", "must be a positive number"))
            else:
                tolerances[k] = float(v)

    out_dir = _get(raw, "output.dir", "out")
    if not isinstance(out_dir, str):
        errors.append(("output.dir", "must be a path string"))
        out_dir = "out"
    formats = _get(raw, "output.formats", ["json", "csv", "plotdata"])
    if (not isinstance(formats, list)
            or not set(formats) <= {"json", "csv", "plotdata"}):
        errors.append(("output.formats",
                       "must be a subset of [json, csv, plotdata]"))
        formats = ["json", "csv", "plotdata"]

    if errors:
        raise ConfigError(errors)

    numerics = Numerics(
        eps_list=tuple(_get(raw, "scenario.eps_list") or ()),
        alpha_list=tuple(_get(raw, "scenario.alpha_list")
                         or Numerics().alpha_list),
        tolerances=tolerances,
        **num_kwargs)
    scenario = Scenario(scatterers=tuple(scatterers), k0=float(k0),
                        dir_in=tuple(dir_in), dir_out=tuple(dir_out),
                        numerics=numerics)
    return RunConfig(scenario=scenario, output_dir=Path(out_dir),
                     formats=tuple(formats), warnings=warnings)


# ---------------------------------------------------------------------------
# artifact writers
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    return f"{x:.12e}"


def _write_summary(path: Path, report) -> None:
    d = report.diagnostics
    born = report.born_terms + [None] * (3 - len(report.born_terms))
    row = {
        "schema_version": str(SUMMARY_SCHEMA_VERSION),
        "k0": _fmt(report.scenario["k0"]),
        "n_scatterers": str(len(report.scenario["scatterers"])),
        "pair_gap": _fmt(d.get("pair_gap")),
        "x0_direct_re": _fmt(report.x0_direct.real),
        "x0_direct_im": _fmt(report.x0_direct.imag),
        "x0_direct_err": _fmt(report.x0_direct_error),
        "x0_structconst_re": _fmt(None if report.x0_structconst is None
                                  else report.x0_structconst.real),
        "x0_structconst_im": _fmt(None if report.x0_structconst is None
                                  else report.x0_structconst.imag),
        "onshell_rel_diff": _fmt(report.onshell_rel_diff),
        "phase_law_max": _fmt(max(report.phase_law_residuals.values())
                              if report.phase_law_residuals else None),
        "alpha_flatness": _fmt(report.alpha_flatness),
        "y_average_rel_diff": _fmt(report.y_average_rel_diff),
        "born1_abs": _fmt(abs(born[0]) if born[0] is not None else None),
        "born2_abs": _fmt(abs(born[1]) if born[1] is not None else None),
        "born3_abs": _fmt(abs(born[2]) if born[2] is not None else None),
        "schatten4": _fmt(report.schatten.get("value")),
        "schatten4_delta": _fmt(report.schatten.get("refinement_delta")),
        "passed": "1" if report.passed else "0",
    }
    lines = [",".join(SUMMARY_COLUMNS), ",".join(row[c] for c in SUMMARY_COLUMNS)]
    path.write_text("\n".join(lines) + "\n")


def _write_plotdata(outdir: Path, report, engine: ScenarioEngine) -> None:
    pd = outdir / "plotdata"
    pd.mkdir(parents=True, exist_ok=True)
    sv = str(SUMMARY_SCHEMA_VERSION)
    eps_seq = sorted(next(iter(report.x_alpha_by_eps.values())).keys(),
                     reverse=True) if report.x_alpha_by_eps else []

    lines = ["schema_version,alpha,"
             + ",".join(f"re_eps{e:g},im_eps{e:g}" for e in eps_seq)
             + ",re_extrap,im_extrap"]
    for a in sorted(report.y_alpha_samples):
        vals = []
        for e in eps_seq:
            v = report.x_alpha_by_eps[a][e] * np.exp(-1j * a * engine.sc.k0)
            vals += [_fmt(v.real), _fmt(v.imag)]
        y = report.y_alpha_samples[a]
        vals += [_fmt(y.real), _fmt(y.imag)]
        lines.append(sv + "," + _fmt(a) + "," + ",".join(vals))
    (pd / "y_alpha.csv").write_text("\n".join(lines) + "\n")

    lines = ["schema_version,eps,re_x0,im_x0"]
    for e in eps_seq:
        v = report.x_alpha_by_eps.get(0.0, {}).get(e)
        if v is not None:
            lines.append(f"{sv},{_fmt(e)},{_fmt(v.real)},{_fmt(v.imag)}")
    lines.append(f"{sv},{_fmt(0.0)},{_fmt(report.x0_direct.real)},"
                 f"{_fmt(report.x0_direct.imag)}")
    (pd / "x0_vs_eps.csv").write_text("\n".join(lines) + "\n")

    if report.x0_structconst is not None:
        lines = ["schema_version,lmax,re_x0,im_x0,rel_delta_vs_full"]
        full = report.x0_structconst
        for lm in range(0, engine.sc.numerics.lmax + 1):
            v, _ = engine.x0_structconst(lmax=lm)
            lines.append(f"{sv},{lm},{_fmt(v.real)},{_fmt(v.imag)},"
                         f"{_fmt(abs(v - full) / abs(full))}")
        (pd / "structconst_lmax.csv").write_text("\n".join(lines) + "\n")


def run(config: RunConfig, threads: int = 1) -> int:
    """Execute a validated config; returns the process exit status."""
    outdir = config.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    engine = ScenarioEngine(config.scenario, threads=threads)
    try:
        report = engine.verify()
    except Exception as exc:
        log.error("run failed: %s", exc)
        payload = {"error": str(exc), "error_type": type(exc).__name__,
                   "config_warnings": config.warnings}
        (outdir / "report.json").write_text(json.dumps(payload, indent=2,
                                                       sort_keys=True) + "\n")
        return 1

    if "json" in config.formats:
        payload = report.to_json_dict()
        payload["config_warnings"] = config.warnings
        (outdir / "report.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n")
    if "csv" in config.formats:
        _write_summary(outdir / "summary.csv", report)
    if "plotdata" in config.formats:
        _write_plotdata(outdir, report, engine)
    for c in report.comparisons:
        log.info("%-22s %.3e (tol %.1e) %s", c["name"], c["value"],
                 c["tolerance"], "PASS" if c["passed"] else "FAIL")
    return 0 if report.passed else 1


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="multiscat",
        description="Desk-scale multiple-scattering verification runs")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for (alpha, eps) work items")
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario config")
    p_run.add_argument("config", type=Path)

    p_val = sub.add_parser("validate", help="validate a config and exit")
    p_val.add_argument("config", type=Path)

    p_sc = sub.add_parser("structconst",
                          help="export a structure-constant table as CSV")
    p_sc.add_argument("--k0", type=float, required=True)
    p_sc.add_argument("--r", "--R", dest="r", type=float, nargs="+",
                      required=True, metavar="R",
                      help="separation: one value (along z) or three components")
    p_sc.add_argument("--lmax", type=int, required=True)
    p_sc.add_argument("--out", type=Path, required=True)

    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s", stream=sys.stderr)

    if args.command in ("run", "validate"):
        try:
            text = args.config.read_text()
        except OSError as exc:
            log.error("cannot read config: %s", exc)
            return 2
        try:
            config = validate_config(text)
        except ConfigError as exc:
            print(exc, file=sys.stderr)
            return 2
        for w in config.warnings:
            print(f"warning: {w}", file=sys.stderr)
        if args.command == "validate":
            print("config OK")
            return 0
        return run(config, threads=args.threads)

    if args.command == "structconst":
        if len(args.r) == 1:
            R = (0.0, 0.0, args.r[0])
        elif len(args.r) == 3:
            R = tuple(args.r)
        else:
            log.error("--r takes one or three values")
            return 2
        try:
            g = structure_constants(args.k0, R, args.lmax)
        except ValueError as exc:
            log.error("%s", exc)
            return 2
        args.out.parent.mkdir(parents=True, exist_ok=True)
        g.to_csv(args.out)
        print(f"wrote {(args.lmax + 1) ** 4} entries to {args.out}")
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
