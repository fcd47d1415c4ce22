"""Command-line front end driven by a single JSON config.

    python -m modelset_fb <command> [config.json | -] [--threads N]

Commands: generate, spectrum, converge, verify, decompose.  The config is
read from the given path, or from standard input when the path is ``-`` or
omitted.  Exit codes: 0 success, 1 check failure, 2 config error,
3 resource cap.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from dataclasses import dataclass

import jsonschema
import numpy as np

from .cps import CutProjectScheme, make_cps, model_set_points, preset
from .errors import (
    AmbiguousMatch,
    Condition1Violated,
    ConfigError,
    HypothesisViolated,
    LevelTooFine,
    ProjectionNotInjective,
    RegionTooLarge,
    SingularMatrix,
)
from .fourier_bohr import convergence_sweep, spectrum
from .lattice import make_lattice
from .psf import (
    REPORT_SCHEMA,
    DualTruncation,
    SummableTestFunction,
    auto_truncation,
    direct_mollified_sum,
    epsilon_R_search,
    jsonable,
    mollifier_gap_sweep,
    psf_identity_check,
    reciprocal_mollified_sum,
    tail_bound_report,
)
from .summation import THREADS_ENV
from .window import AlignedBoxWindow, MollifierParams, Window, window_from_spec

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CAP = 0, 1, 2, 3
COMMANDS = ("generate", "spectrum", "converge", "verify", "decompose")

_vector = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_int_vector = {"type": "array", "items": {"type": "integer"}, "minItems": 1}
_radii = {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "preset": {"type": "string"},
        "cps": {
            "type": "object",
            "properties": {
                "basis": {"type": "array", "items": _vector, "minItems": 2},
                "d": {"type": "integer", "minimum": 1},
                "n_check": {"type": "integer", "minimum": 1},
            },
            "required": ["basis", "d"],
            "additionalProperties": False,
        },
        "window": {"type": "object"},
        "output": {"type": "string"},
        "svg": {"type": "string"},
        "R": {"type": "number", "exclusiveMinimum": 0},
        "R_list": _radii,
        "t": _vector,
        "m": _int_vector,
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "K_phys": {"type": "number", "exclusiveMinimum": 0},
        "I_min": {"type": "number", "exclusiveMinimum": 0},
        "K_star": {"oneOf": [{"type": "number", "exclusiveMinimum": 0}, _vector]},
        "max_final_error": {"type": "number", "minimum": 0},
        "levels": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        "R_pair": _radii,
        "R_sweep": _radii,
        "eta_ratio_factor": {"type": "number", "exclusiveMinimum": 0},
        "K_star_cap": {"type": "number", "exclusiveMinimum": 0},
        "max_rel_tail": {"type": "number", "exclusiveMinimum": 0},
        "truncation": {
            "type": "object",
            "properties": {
                "physical": {"type": "number", "exclusiveMinimum": 0},
                "internal": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["physical", "internal"],
            "additionalProperties": False,
        },
        "psf": {
            "type": "object",
            "properties": {
                "n_points": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "width": {"type": "number", "exclusiveMinimum": 0},
                "order": {"type": "integer", "minimum": 2},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


@dataclass
class RunConfig:
    """Validated config with the scheme and window already built."""

    raw: dict
    cps: CutProjectScheme
    window: Window

    def get(self, key, default=None):
        return self.raw.get(key, default)

    def frequency(self) -> tuple[np.ndarray, np.ndarray | None]:
        """``(t, m)``; ``m`` is set when the frequency was given by dual coordinates."""
        if "m" in self.raw:
            m = np.asarray(self.raw["m"], dtype=np.int64)
            theta, _ = self.cps.dual_points(m)
            return theta[0], m
        t = np.asarray(self.raw.get("t", [0.0] * self.cps.d), dtype=float)
        return t, None


def _increasing(values) -> bool:
    return all(b > a for a, b in zip(values, values[1:]))


def load_config(raw: dict) -> RunConfig:
    """Schema-check ``raw`` and build the scheme; raises :class:`ConfigError`."""
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None
    if ("preset" in raw) == ("cps" in raw):
        raise ConfigError("give exactly one of 'preset' or 'cps'")
    if "t" in raw and "m" in raw:
        raise ConfigError("give at most one of 't' or 'm'")
    for key in ("R_list", "R_pair", "R_sweep", "levels"):
        if key in raw and not _increasing(raw[key]):
            raise ConfigError(f"'{key}' must be strictly increasing")
    if "preset" in raw:
        cps = preset(raw["preset"])
    else:
        spec = raw["cps"]
        try:
            L = make_lattice(spec["basis"])
            cps = make_cps(L, spec["d"], n_check=spec.get("n_check", 50))
        except (SingularMatrix, ProjectionNotInjective, ValueError) as exc:
            raise ConfigError(f"invalid cps: {exc}") from exc
    if "window" in raw:
        window = window_from_spec(raw["window"])
    elif cps.default_window is not None:
        window = cps.default_window
    else:
        raise ConfigError("an inline cps needs a 'window'")
    if window.dim != cps.m:
        raise ConfigError(f"window dimension {window.dim} != internal dimension {cps.m}")
    if "m" in raw and len(raw["m"]) != cps.k:
        raise ConfigError(f"'m' needs {cps.k} entries")
    if "t" in raw and len(raw["t"]) != cps.d:
        raise ConfigError(f"'t' needs {cps.d} entries")
    return RunConfig(raw, cps, window)


# output helpers


def fmt(x: float) -> str:
    return "%.17g" % float(x)


def csv_text(header: list[str], rows) -> str:
    out = io.StringIO()
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(fmt(v) for v in row) + "\n")
    return out.getvalue()


def emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


# commands


def cmd_generate(cfg: RunConfig) -> int:
    if "R" not in cfg.raw:
        raise ConfigError("generate needs 'R'")
    cps = cfg.cps
    pts = model_set_points(cps, cfg.window, cfg.raw["R"])
    header = (
        [f"lambda_{i + 1}" for i in range(cps.d)]
        + [f"star_{i + 1}" for i in range(cps.m)]
        + [f"n_{i + 1}" for i in range(cps.k)]
    )
    rows = np.concatenate([pts.physical, pts.internal, pts.coords.astype(float)], axis=1)
    emit(csv_text(header, rows), cfg.get("output"))
    return EXIT_OK


def spectrum_svg(entries, d: int, K_phys: float) -> str:
    """Static figure: stems at ``(theta, I)`` for d = 1, disks with area ~ I for d = 2."""
    size, pad = 480, 40
    span = size - 2 * pad
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
    ]
    top = max((e.intensity for e in entries), default=1.0)
    if d == 1:
        base = size - pad
        lines.append(f'<line x1="{pad}" y1="{base}" x2="{size - pad}" y2="{base}" stroke="black"/>')
        for e in entries:
            x = pad + span * (e.theta[0] + K_phys) / (2 * K_phys)
            y = base - span * e.intensity / top
            lines.append(f'<line x1="{x:.4f}" y1="{base}" x2="{x:.4f}" y2="{y:.4f}" stroke="black" stroke-width="1"/>')
            lines.append(f'<circle cx="{x:.4f}" cy="{y:.4f}" r="2" fill="black"/>')
    else:
        rmax = span / 40
        lines.append(f'<rect x="{pad}" y="{pad}" width="{span}" height="{span}" fill="none" stroke="black"/>')
        for e in entries:
            x = pad + span * (e.theta[0] + K_phys) / (2 * K_phys)
            y = pad + span * (K_phys - e.theta[1]) / (2 * K_phys)
            r = rmax * math.sqrt(e.intensity / top)
            lines.append(f'<circle cx="{x:.4f}" cy="{y:.4f}" r="{r:.4f}" fill="black"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def cmd_spectrum(cfg: RunConfig) -> int:
    cps = cfg.cps
    K_phys = float(cfg.get("K_phys", 5.0))
    I_min = float(cfg.get("I_min", 1e-3))
    entries = spectrum(cps, cfg.window, K_phys, I_min, cfg.get("K_star"))
    header = (
        [f"m_{i + 1}" for i in range(cps.k)]
        + [f"theta_{i + 1}" for i in range(cps.d)]
        + [f"theta_star_{i + 1}" for i in range(cps.m)]
        + ["re_amp", "im_amp", "intensity"]
    )
    rows = [
        list(e.m) + list(e.theta) + list(e.theta_star) + [e.amplitude.real, e.amplitude.imag, e.intensity]
        for e in entries
    ]
    emit(csv_text(header, rows), cfg.get("output"))
    if "svg" in cfg.raw:
        emit(spectrum_svg(entries, cps.d, K_phys), cfg.raw["svg"])
    return EXIT_OK


def cmd_converge(cfg: RunConfig) -> int:
    if "R_list" not in cfg.raw:
        raise ConfigError("converge needs 'R_list'")
    t, m = cfg.frequency()
    rows = convergence_sweep(cfg.cps, cfg.window, t, cfg.raw["R_list"], m=m, tol=cfg.get("tol", 1e-9))
    header = ["R", "re_aR", "im_aR", "re_limit", "im_limit", "abs_err", "points"]
    table = [
        [r.R, r.a_R.real, r.a_R.imag, r.a_limit.real, r.a_limit.imag, r.abs_err, r.points] for r in rows
    ]
    emit(csv_text(header, table), cfg.get("output"))
    limit = cfg.get("max_final_error")
    if limit is not None and rows[-1].abs_err > limit:
        print(f"final abs_err {rows[-1].abs_err:.3e} exceeds {limit:g}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _check(name: str, passed: bool, **details) -> dict:
    return {"name": name, "status": "pass" if passed else "fail", "pass": bool(passed), **details}


def _skipped(name: str, reason: str) -> dict:
    return {"name": name, "status": "skipped", "pass": None, "reason": reason}


def _verify_psf(cfg: RunConfig) -> dict:
    opts = cfg.get("psf", {})
    L = cfg.cps.lattice
    f = SummableTestFunction(np.full(L.dim, float(opts.get("width", 1.0))), int(opts.get("order", 2)))
    rng = np.random.default_rng(opts.get("seed", 0))
    ys = rng.uniform(-1.0, 1.0, size=(opts.get("n_points", 10), L.dim))
    results = [psf_identity_check(L, f, y) for y in ys]
    items = [
        {"y": r.y, "lhs": r.lhs, "rhs": r.rhs, "gap": r.gap, "tail_bound": r.tail_bound, "pass": r.passed}
        for r in results
    ]
    return _check(
        "psf_identity", all(r.passed for r in results),
        tolerance="gap <= tail_bound + 1e-9", order=f.order, width=float(f.widths[0]), points=items,
    )


def _truncation(cfg: RunConfig, params: MollifierParams):
    spec = cfg.get("truncation")
    if spec is None:
        return auto_truncation(cfg.cps, cfg.window, params)
    return DualTruncation.uniform(cfg.cps, spec["physical"], spec["internal"]), False


def _verify_identity(cfg: RunConfig, t, cap: float) -> dict:
    cps, W = cfg.cps, cfg.window
    max_rel = float(cfg.get("max_rel_tail", 1e-3))
    items = []
    for R in cfg.get("R_pair", [50.0, 200.0]):
        S = math.sqrt(R)
        eps = epsilon_R_search(cps, t, S, cap)
        params = MollifierParams(float(R), S, eps.value)
        trunc, capped = _truncation(cfg, params)
        direct = direct_mollified_sum(cps, W, t, params)
        rec = reciprocal_mollified_sum(cps, W, t, params, trunc)
        scale = cps.density * (2 * R) ** cps.d * W.volume
        gap = abs(direct - rec.value)
        agree = gap <= rec.tail_bound + 1e-8 * (2 * R) ** cps.d
        tight = rec.tail_bound <= max_rel * scale
        items.append({
            "R": R, "S_R": S, "eps_R": eps.value, "eps_capped": eps.capped,
            "direct": direct, "reciprocal": rec.value, "main_term": rec.main_term,
            "gap": gap, "tail_bound": rec.tail_bound, "relative_tail": rec.tail_bound / scale,
            "truncation": {"physical": trunc.physical, "internal": trunc.internal},
            "budget_bound": capped, "dual_points": rec.n_terms,
            "agree": bool(agree), "tail_within_limit": bool(tight), "pass": bool(agree and tight),
        })
    return _check(
        "direct_vs_reciprocal", all(i["pass"] for i in items),
        tolerance=f"gap <= tail_bound + 1e-8 (2R)^d and tail_bound <= {max_rel:g} dens(L) (2R)^d vol(W)",
        radii=items,
    )


def _verify_tail(cfg: RunConfig, t, cap: float) -> dict:
    cps, W = cfg.cps, cfg.window
    factor = float(cfg.get("eta_ratio_factor", 2.0))
    reports = []
    for R in cfg.get("R_sweep", [50.0, 100.0, 200.0, 400.0]):
        S = math.sqrt(R)
        params = MollifierParams(float(R), S, epsilon_R_search(cps, t, S, cap).value)
        trunc, _ = _truncation(cfg, params)
        reports.append(tail_bound_report(cps, W, t, params, trunc))
    ratios = np.array([r.ratio for r in reports])
    median = float(np.median(ratios))
    return _check(
        "tail_bound_ratio", bool(ratios.max() <= factor * median),
        tolerance=f"max ratio <= {factor:g} x median ratio", median_ratio=median, reports=reports,
    )


def _verify_gap(cfg: RunConfig, t, cap: float) -> dict:
    rows = mollifier_gap_sweep(cfg.cps, cfg.window, t, cfg.get("R_sweep", [50.0, 100.0, 200.0, 400.0]), cap)
    return _check(
        "mollifier_gap", rows[-1].normalized_gap < rows[0].normalized_gap,
        tolerance="last normalized gap < first", rows=rows,
    )


def cmd_verify(cfg: RunConfig) -> int:
    t, m = cfg.frequency()
    cap = float(cfg.get("K_star_cap", 1e3))
    checks = [_verify_psf(cfg)]
    mollified = [
        ("direct_vs_reciprocal", _verify_identity),
        ("tail_bound_ratio", _verify_tail),
        ("mollifier_gap", _verify_gap),
    ]
    W = cfg.window
    cube = isinstance(W, AlignedBoxWindow) and np.allclose(W.sides, W.sides[0], rtol=1e-12)
    for name, run in mollified:
        if not isinstance(W, AlignedBoxWindow) or (name == "tail_bound_ratio" and not cube):
            checks.append(_skipped(name, "needs an axis-aligned cube window"))
            continue
        try:
            checks.append(run(cfg, t, cap))
        except (HypothesisViolated, Condition1Violated) as exc:
            checks.append(_skipped(name, f"{type(exc).__name__}: {exc}"))
    ok = all(c["pass"] is not False for c in checks)
    report = {
        "schema": REPORT_SCHEMA,
        "scheme": {"name": cfg.cps.name, "basis": cfg.cps.lattice.basis, "d": cfg.cps.d},
        "window": repr(W),
        "t": t,
        "m": m,
        "checks": checks,
        "pass": ok,
    }
    emit(json.dumps(jsonable(report), indent=2, allow_nan=False) + "\n", cfg.get("output"))
    if not ok:
        failed = [c["name"] for c in checks if c["pass"] is False]
        print(f"failed checks: {', '.join(failed)}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_decompose(cfg: RunConfig) -> int:
    W = cfg.window
    header = ["level", "n_inner", "n_boundary", "vol_inner", "vol_boundary"]
    rows = []
    for n in cfg.get("levels", [3, 4, 5, 6, 7, 8]):
        dec = W.decompose(n)
        rows.append([n, dec.n_inner, dec.n_boundary, dec.vol_inner, dec.vol_boundary])
    emit(csv_text(header, rows), cfg.get("output"))
    return EXIT_OK


HANDLERS = {
    "generate": cmd_generate,
    "spectrum": cmd_spectrum,
    "converge": cmd_converge,
    "verify": cmd_verify,
    "decompose": cmd_decompose,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modelset-fb",
        description="Model sets, Fourier-Bohr coefficients and Poisson summation checks.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("config", nargs="?", default="-", help="JSON config path, '-' for stdin")
    parser.add_argument(
        "--threads", type=int, default=None,
        help=f"worker threads for long sums (overrides ${THREADS_ENV}); results do not depend on it",
    )
    return parser


def _read_config(path: str) -> dict:
    try:
        text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return raw


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be at least 1", file=sys.stderr)
            return EXIT_CONFIG
        os.environ[THREADS_ENV] = str(args.threads)
    try:
        cfg = load_config(_read_config(args.config))
        return HANDLERS[args.command](cfg)
    except (ConfigError, AmbiguousMatch) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RegionTooLarge, LevelTooFine) as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
