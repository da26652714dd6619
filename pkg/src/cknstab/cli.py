"""Command-line driver for the verification campaigns.

Subcommands mirror the campaign modules: verify-identities, vector-scan,
estimate-constant, counterexample, poincare, corpus-dump.  Options come
from an INI-style config file plus command-line flags; flags win.  Reports
are CSV or JSON with all floats printed at 17 significant digits so runs
can be compared byte-for-byte (the timestamp header is suppressible).

Exit codes: 0 all checks passed, 1 violations or campaign failure,
2 configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .experiments import (
    PoincareConfig,
    build_default_corpus,
    change_of_variables_check,
    estimate_stability_constant,
    poincare_check,
    poincare_scaling_consistency,
    verify_identities,
)
from .manifold import counterexample_search
from .params import PRESETS, CknParams, StabilityForm
from .radial import RadialProfile, default_scheme, extremal_profile, unit_bump
from .vectorineq import estimate_gap_constant

__all__ = ["ConfigError", "RunConfig", "run", "main"]

COMMANDS = (
    "verify-identities",
    "vector-scan",
    "estimate-constant",
    "counterexample",
    "poincare",
    "corpus-dump",
)

_RUN_KEYS = {"command", "preset", "output", "format", "seed", "jobs", "no_timestamp"}
_SCHEME_KEYS = {"rel_tol", "r_min", "r_max", "nodes_per_panel", "panels_per_decade"}
_PARAMS_KEYS = {"n", "p", "a", "b"}
_EXTRA_KEYS = {
    "vector-scan": {"p", "samples"},
    "counterexample": {"c1", "c2"},
    "poincare": {"p", "rho", "sigma", "theta", "lam", "domain"},
}


class ConfigError(ValueError):
    """Malformed configuration (unknown key, bad value, missing field)."""


@dataclass
class RunConfig:
    command: str
    presets: list[str] = field(default_factory=list)
    params: CknParams | None = None
    output: str | None = None
    format: str = "csv"
    seed: int = 0
    jobs: int = 1
    rel_tol: float = 1e-10
    no_timestamp: bool = False
    scheme_overrides: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def resolve_params_sets(self) -> list[tuple[str, CknParams]]:
        out: list[tuple[str, CknParams]] = []
        for name in self.presets:
            if name not in PRESETS:
                raise ConfigError(
                    f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
                )
            out.append((name, PRESETS[name].params))
        if self.params is not None:
            out.append(("custom", self.params))
        if not out:
            raise ConfigError("no parameter set given (use --preset or a [params] section)")
        return out

    def scheme(self):
        kw = {"rel_tol": self.rel_tol}
        kw.update(self.scheme_overrides)
        return default_scheme(**kw)


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _parse_config_file(path: str) -> dict:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    known_sections = {"run", "scheme", "params"} | set(_EXTRA_KEYS)
    out: dict = {"run": {}, "scheme": {}, "params": {}, "extra": {}}
    for section in parser.sections():
        if section not in known_sections:
            raise ConfigError(f"unknown config section [{section}]")
        for key, value in parser.items(section):
            if section == "run":
                if key not in _RUN_KEYS:
                    raise ConfigError(f"unknown key {key!r} in [run]")
                out["run"][key] = value
            elif section == "scheme":
                if key not in _SCHEME_KEYS:
                    raise ConfigError(f"unknown key {key!r} in [scheme]")
                out["scheme"][key] = value
            elif section == "params":
                if key not in _PARAMS_KEYS:
                    raise ConfigError(f"unknown key {key!r} in [params]")
                out["params"][key] = value
            else:
                if key not in _EXTRA_KEYS[section]:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
                out["extra"].setdefault(section, {})[key] = value
    return out


def _build_config(args: argparse.Namespace) -> RunConfig:
    file_cfg = _parse_config_file(args.config) if args.config else {
        "run": {}, "scheme": {}, "params": {}, "extra": {}}
    run_sec = file_cfg["run"]

    command = args.command or run_sec.get("command")
    if command not in COMMANDS:
        raise ConfigError(f"missing or unknown command {command!r}")

    presets: list[str] = []
    preset_value = args.preset if args.preset is not None else run_sec.get("preset")
    if preset_value:
        presets = [p.strip() for p in str(preset_value).split(",") if p.strip()]

    params = None
    if file_cfg["params"]:
        sec = file_cfg["params"]
        missing = _PARAMS_KEYS - set(sec)
        if missing:
            raise ConfigError(f"[params] section incomplete, missing {sorted(missing)}")
        try:
            params = CknParams(N=int(sec["n"]), p=float(sec["p"]),
                               a=float(sec["a"]), b=float(sec["b"]))
        except ValueError as exc:
            raise ConfigError(f"bad [params] values: {exc}") from exc

    def pick(flag, key, cast, default):
        if flag is not None:
            return flag
        if key in run_sec:
            try:
                return cast(run_sec[key])
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {run_sec[key]!r}") from exc
        return default

    scheme_overrides: dict = {}
    for key, cast in (("r_min", float), ("r_max", float),
                      ("nodes_per_panel", int), ("panels_per_decade", float)):
        if key in file_cfg["scheme"]:
            try:
                scheme_overrides[key] = cast(file_cfg["scheme"][key])
            except ValueError as exc:
                raise ConfigError(f"bad [scheme] value for {key!r}") from exc
    rel_tol = args.rel_tol
    if rel_tol is None and "rel_tol" in file_cfg["scheme"]:
        try:
            rel_tol = float(file_cfg["scheme"]["rel_tol"])
        except ValueError as exc:
            raise ConfigError("bad [scheme] rel_tol") from exc
    if rel_tol is None:
        rel_tol = 1e-10

    extra = {k: dict(v) for k, v in file_cfg["extra"].items()}
    for name in ("p", "samples", "c1", "c2", "rho", "sigma", "theta", "lam", "domain"):
        val = getattr(args, name.replace("-", "_"), None)
        if val is not None:
            extra.setdefault(command, {})[name] = val

    try:
        cfg = RunConfig(
            command=command,
            presets=presets,
            params=params,
            output=pick(args.output, "output", str, None),
            format=pick(args.format, "format", str, "csv"),
            seed=pick(args.seed, "seed", int, 0),
            jobs=pick(args.jobs, "jobs", int, 1),
            rel_tol=rel_tol,
            no_timestamp=bool(args.no_timestamp or run_sec.get("no_timestamp") in
                              ("1", "true", "yes")),
            scheme_overrides=scheme_overrides,
            extra=extra,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.format not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {cfg.format!r}")
    if cfg.seed < 0:
        raise ConfigError("seed must be nonnegative")
    return cfg


def _write_report(cfg: RunConfig, header: list[str], rows: list[list], summary: dict) -> None:
    if cfg.format == "csv":
        buf = io.StringIO()
        if not cfg.no_timestamp:
            buf.write(f"# generated {datetime.now(timezone.utc).isoformat()}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])
        text = buf.getvalue()
    else:
        payload = {"rows": [dict(zip(header, row)) for row in rows], "summary": summary}
        if not cfg.no_timestamp:
            payload["generated"] = datetime.now(timezone.utc).isoformat()
        text = json.dumps(payload, indent=2, sort_keys=True, default=_fmt) + "\n"
    if cfg.output:
        Path(cfg.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _cmd_verify_identities(cfg: RunConfig) -> int:
    scheme = cfg.scheme()
    sets = cfg.resolve_params_sets()
    corpus = build_default_corpus([p for _, p in sets], seed=cfg.seed)
    report = verify_identities(corpus, scheme, jobs=cfg.jobs)
    header = ["profile", "params", "deficit_ni", "gap_ni", "resid_ni",
              "deficit_si", "gap_si", "resid_si", "passed"]
    rows = [[r.profile, r.params, r.deficit_ni, r.gap_ni, r.resid_ni,
             r.deficit_si, r.gap_si, r.resid_si, int(r.passed())] for r in report.rows]
    _write_report(cfg, header, rows, report.summary())
    ok = report.passed
    print(f"identity check: {report.summary()}", file=sys.stderr)
    return 0 if ok else 1


def _cmd_vector_scan(cfg: RunConfig) -> int:
    opts = cfg.extra.get("vector-scan", {})
    try:
        p = float(opts.get("p", 2.0))
        samples = int(opts.get("samples", 100_000))
    except ValueError as exc:
        raise ConfigError(f"bad vector-scan options: {exc}") from exc
    est = estimate_gap_constant(p, samples, seed=cfg.seed)
    header = ["p", "gamma", "constant", "sample_count", "seed", "worst_witness"]
    witness = json.dumps({"x": list(est.worst_witness.x), "y": list(est.worst_witness.y)})
    rows = [[p, "", est.value, est.sample_count, cfg.seed, witness]]
    _write_report(cfg, header, rows, {"constant": est.value})
    print(f"gap constant estimate at p={p:g}: {est.value:.17g}", file=sys.stderr)
    return 0 if est.value > 0.0 else 1


def _form_for(cfg: RunConfig, name: str) -> StabilityForm:
    preset = PRESETS.get(name)
    if preset is None:
        raise ConfigError(f"unknown preset {name!r}")
    if preset.form is None:
        raise ConfigError(f"preset {name!r} has no stability-estimate form")
    return preset.form


def _cmd_estimate_constant(cfg: RunConfig) -> int:
    scheme = cfg.scheme()
    sets = cfg.resolve_params_sets()
    rows = []
    all_ok = True
    summaries = {}
    for name, params in sets:
        form = _form_for(cfg, name) if name in PRESETS else StabilityForm.SI_PNORM
        if form is StabilityForm.SCALING:
            raise ConfigError(f"preset {name!r} has no stability-constant form")
        corpus = build_default_corpus([params], seed=cfg.seed)
        est = estimate_stability_constant(corpus, params, form, scheme)
        for r in est.rows:
            rows.append([name, form.value, r.profile, r.deficit, r.prefactor,
                         r.distance, r.ratio if math.isfinite(r.ratio) else "",
                         int(r.excluded)])
        summaries[name] = {"constant": est.value, "excluded": est.excluded_count,
                           "worst": est.worst_witness}
        all_ok = all_ok and est.value > 0.0
        print(f"{name}: constant estimate {est.value:.17g} "
              f"(excluded {est.excluded_count})", file=sys.stderr)
    header = ["preset", "form", "profile", "deficit", "prefactor",
              "distance", "ratio", "excluded"]
    _write_report(cfg, header, rows, summaries)
    return 0 if all_ok else 1


def _cmd_counterexample(cfg: RunConfig) -> int:
    scheme = cfg.scheme()
    sets = cfg.resolve_params_sets()
    opts = cfg.extra.get("counterexample", {})
    try:
        c1 = float(opts.get("c1", 1.0))
        c2 = float(opts.get("c2", 0.0))
    except ValueError as exc:
        raise ConfigError(f"bad counterexample options: {exc}") from exc
    rows = []
    ok = True
    for name, params in sets:
        rep = counterexample_search(unit_bump(1.0, 2.0), params, c1, c2, scheme)
        rows.append([name, rep.route, rep.lam, rep.deficit_u, rep.deficit_scaled,
                     rep.side_term_scaled, rep.side_distance_scaled,
                     rep.slack_deficit, rep.slack_factor2, int(rep.certified)])
        ok = ok and rep.certified
        print(f"{name}: route={rep.route} lam={rep.lam:.6g} "
              f"certified={rep.certified}", file=sys.stderr)
    header = ["preset", "route", "lam", "deficit_u", "deficit_scaled",
              "side_term", "side_distance", "slack_deficit", "slack_factor2",
              "certified"]
    _write_report(cfg, header, rows, {"certified": ok})
    return 0 if ok else 1


def _poincare_profiles() -> list[RadialProfile]:
    lin = RadialProfile(fn=lambda r: r, dfn=lambda r: np.ones_like(r),
                        support=(0.0, math.inf), label="linear")
    sq = RadialProfile(fn=lambda r: r**2, dfn=lambda r: 2.0 * r,
                       support=(0.0, math.inf), label="square")
    inv = RadialProfile(fn=lambda r: 1.0 / (1.0 + r), dfn=lambda r: -1.0 / (1.0 + r) ** 2,
                        support=(0.0, math.inf), label="inverse")
    return [lin, sq, inv, unit_bump(0.8, 2.5).with_label("bump"),
            extremal_profile(CknParams(3, 2.0, 0.0, 0.0), 1.0, 1.0).with_label("expdecay")]


def _parse_domain(text: str):
    if text == "all":
        return "all"
    try:
        parts = []
        for chunk in text.split(","):
            a, b = chunk.split(":")
            parts.append((float(a), float(b)))
        return tuple(parts)
    except ValueError as exc:
        raise ConfigError(f"bad domain {text!r} (use 'all' or 'a:b,c:d')") from exc


def _cmd_poincare(cfg: RunConfig) -> int:
    scheme = cfg.scheme()
    opts = cfg.extra.get("poincare", {})
    try:
        pcfg = PoincareConfig(
            p=float(opts.get("p", 2.0)),
            rho=float(opts.get("rho", 0.0)),
            sigma=float(opts.get("sigma", 1.0)),
            theta=float(opts.get("theta", 1.0)),
            lam=float(opts.get("lam", 1.0)),
            domain=_parse_domain(str(opts.get("domain", "all"))),
        )
    except ValueError as exc:
        raise ConfigError(f"bad poincare options: {exc}") from exc
    N = 3 if cfg.params is None else cfg.params.N
    rows = []
    ok = True
    for prof in _poincare_profiles():
        rep, dil, rel = poincare_scaling_consistency(prof, pcfg, N, scheme)
        cov = change_of_variables_check(prof, 2.0, N, scheme)
        good = rep.passed and rel <= 1e-8 and cov.passed
        rows.append([prof.label, rep.lhs, rep.rhs_core, rep.c_star,
                     rep.ratio if math.isfinite(rep.ratio) else "", rel,
                     cov.rel_diff, int(good)])
        ok = ok and good
    header = ["profile", "lhs", "rhs_core", "c_star", "ratio",
              "scale_consistency", "change_of_vars", "passed"]
    _write_report(cfg, header, rows, {"passed": ok})
    print(f"poincare checks {'passed' if ok else 'FAILED'}", file=sys.stderr)
    return 0 if ok else 1


def _cmd_corpus_dump(cfg: RunConfig) -> int:
    sets = cfg.resolve_params_sets()
    corpus = build_default_corpus([p for _, p in sets], seed=cfg.seed)
    payload = []
    for entry in corpus.entries:
        for prof in entry.profiles:
            rec = dict(prof.recipe)
            rec["label"] = prof.label
            rec["params"] = {"N": entry.params.N, "p": entry.params.p,
                             "a": entry.params.a, "b": entry.params.b}
            payload.append(rec)
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if cfg.output:
        Path(cfg.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


_HANDLERS = {
    "verify-identities": _cmd_verify_identities,
    "vector-scan": _cmd_vector_scan,
    "estimate-constant": _cmd_estimate_constant,
    "counterexample": _cmd_counterexample,
    "poincare": _cmd_poincare,
    "corpus-dump": _cmd_corpus_dump,
}


def run(config: RunConfig) -> int:
    """Execute one campaign; returns the process exit status."""
    handler = _HANDLERS.get(config.command)
    if handler is None:
        raise ConfigError(f"unknown command {config.command!r}")
    return handler(config)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ckn-stab",
        description="Numerical verification campaigns for weighted interpolation "
                    "inequalities and their stability estimates.",
    )
    parser.add_argument("command", nargs="?", choices=COMMANDS)
    parser.add_argument("--config", help="INI config file; flags override it")
    parser.add_argument("--preset", help="named parameter preset(s), comma separated")
    parser.add_argument("--output", help="report path (stdout when omitted)")
    parser.add_argument("--format", choices=["csv", "json"])
    parser.add_argument("--seed", type=int)
    parser.add_argument("--jobs", type=int, help="worker cap for campaign fan-out")
    parser.add_argument("--rel-tol", type=float, dest="rel_tol")
    parser.add_argument("--no-timestamp", action="store_true",
                        help="suppress the timestamp header for byte-stable output")
    parser.add_argument("--p", type=float, help="exponent for vector-scan/poincare")
    parser.add_argument("--samples", type=int, help="sample count for vector-scan")
    parser.add_argument("--c1", type=float, help="gradient-side constant (counterexample)")
    parser.add_argument("--c2", type=float, help="mass-side constant (counterexample)")
    parser.add_argument("--rho", type=float, help="weight exponent (poincare)")
    parser.add_argument("--sigma", type=float, help="measure strength (poincare)")
    parser.add_argument("--theta", type=float, help="measure stretch power (poincare)")
    parser.add_argument("--lam", type=float, help="measure scale (poincare)")
    parser.add_argument("--domain", help="'all' or annuli 'a:b,c:d' (poincare)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _build_config(args)
        return run(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as exc:
        print(f"campaign error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
