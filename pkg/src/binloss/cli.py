"""Command line front end.

    binloss analyze      --config cfg.json --out DIR
    binloss sweep-bins   --config cfg.json --out DIR
    binloss conv-example --config cfg.json --out DIR
    binloss mc-validate  --config cfg.json --out DIR [--seed N]

Every command also takes ``--nodes`` to override ``quadrature.nodes_per_axis``.
Configs are single JSON documents; matrices and reports are written as JSON
(arrays row-major with an explicit ``shape``), tables as CSV.  Floats are
written with 17 significant digits.

Exit codes: 0 success, 1 a validation gate failed, 2 bad config or input,
3 numerical-domain error (nonpositive density, empty bin, sampler envelope).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .binning import explicit_scheme, uniform_grid
from .errors import BinLossError, ConfigError, DomainError, EnvelopeExceededError
from .fisher import (
    LossReport,
    auc_from_detectability,
    average_loss_trace,
    fim_binned,
    fim_difference,
    fim_list_mode,
    loss_quadform,
)
from .model import (
    AttributeSpace,
    affine_1d_model,
    constant_model,
    gaussian_mixture_model,
    gaussian_sum,
    scaled_profile_model,
)
from .montecarlo import empirical_mean_check, sample_list, write_events
from .quadrature import DEFAULT_NODES_PER_AXIS, build_rule, rebin_rule
from .reconstruction import (
    ObjectGrid,
    PsfSpec,
    build_convolution_operator,
    fim_object,
    loss_object,
    object_from_bumps,
)

EXIT_OK = 0
EXIT_GATE = 1
EXIT_CONFIG = 2
EXIT_DOMAIN = 3

_MAX_SHARED_CELLS = 4096


# ---------------------------------------------------------------------------
# output formatting
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"non-finite value {x!r} in output")
    return f"{x:.17g}"


def _json(obj, indent: int = 0) -> str:
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _json(v, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(obj)
    return json.dumps(obj)


def matrix_payload(m) -> dict:
    m = np.atleast_2d(np.asarray(m, dtype=float))
    return {"shape": list(m.shape), "data": m.ravel().tolist()}


def write_json(path: Path, obj) -> None:
    path.write_text(_json(obj) + "\n", encoding="utf-8")


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    def cell(v):
        if v is None:
            return ""
        if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
            return str(int(v))
        if isinstance(v, (bool, np.bool_)):
            return "true" if v else "false"
        return _fmt(v)

    lines = [",".join(header)] + [",".join(cell(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def _require(section: dict, key: str, where: str):
    if not isinstance(section, dict) or key not in section:
        raise ConfigError(f"missing field '{where}.{key}'")
    return section[key]


def _numbers(value, where: str, ndim: int = 1) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"field '{where}' must be numeric") from None
    if arr.ndim == 0 and ndim == 1:
        arr = arr.reshape(1)
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"field '{where}' must be finite")
    return arr


def _space(section, default=None) -> AttributeSpace:
    if section is None:
        if default is None:
            raise ConfigError("missing field 'space'")
        return default
    return AttributeSpace(_numbers(_require(section, "lower", "space"), "space.lower"),
                          _numbers(_require(section, "upper", "space"), "space.upper"))


def _bumps(section: dict, where: str) -> tuple[float, list[dict]]:
    bg = float(_numbers(section.get("background", 0.0), f"{where}.background")[0])
    bumps = []
    for i, b in enumerate(section.get("bumps", [])):
        w = f"{where}.bumps[{i}]"
        bumps.append({
            "amplitude": float(_numbers(_require(b, "amplitude", w), f"{w}.amplitude")[0]),
            "center": _numbers(_require(b, "center", w), f"{w}.center"),
            "width": float(_numbers(_require(b, "width", w), f"{w}.width")[0]),
        })
    return bg, bumps


def build_model(section: dict):
    """Zoo model and theta from a ``model`` config section."""
    kind = _require(section, "kind", "model")
    theta = _numbers(_require(section, "theta", "model"), "model.theta")
    space = section.get("space")
    if kind == "constant":
        model = constant_model(space=_space(space, AttributeSpace.interval(0.0, 1.0)))
    elif kind == "affine-1d":
        model = affine_1d_model()
    elif kind == "scaled-profile":
        bg, bumps = _bumps(_require(section, "profile", "model"), "model.profile")
        model = scaled_profile_model(lambda a: gaussian_sum(a, bg, bumps),
                                     _space(space, AttributeSpace.interval(0.0, 1.0)))
    elif kind == "gaussian-mixture":
        model = gaussian_mixture_model(int(section.get("n_components", 1)),
                                       _space(space, AttributeSpace.interval(0.0, 1.0)))
    else:
        raise ConfigError(f"unknown model kind {kind!r}")
    if theta.shape != (model.param_dim,):
        raise ConfigError(f"field 'model.theta' needs {model.param_dim} values for {kind}")
    return model, theta


def build_scheme(section: dict | None, space: AttributeSpace, counts=None):
    if counts is not None:
        return uniform_grid(space, counts)
    if section is None:
        raise ConfigError("missing field 'binning'")
    if "counts" in section:
        return uniform_grid(space, _numbers(section["counts"], "binning.counts").astype(int))
    if "cells" in section:
        cells = section["cells"]
        return explicit_scheme(space,
                               _numbers(_require(cells, "lower", "binning.cells"), "binning.cells.lower", 2),
                               _numbers(_require(cells, "upper", "binning.cells"), "binning.cells.upper", 2))
    raise ConfigError("field 'binning' needs 'counts' or 'cells'")


def _object_values(section: dict, grid: ObjectGrid, where: str) -> np.ndarray:
    if "values" in section:
        vals = _numbers(section["values"], f"{where}.values")
        if vals.shape != (grid.n_points,):
            raise ConfigError(f"field '{where}.values' needs {grid.n_points} entries")
        return vals
    bg, bumps = _bumps(section, where)
    return object_from_bumps(grid, bg, bumps)


def build_system(section: dict):
    """Psf, object grid, object and perturbation from a ``system`` section."""
    g = _require(section, "object_grid", "system")
    grid = ObjectGrid(float(_require(g, "lower", "system.object_grid")),
                      float(_require(g, "upper", "system.object_grid")),
                      int(_require(g, "n_points", "system.object_grid")))
    p = _require(section, "psf", "system")
    psf = PsfSpec(_require(p, "kind", "system.psf"), width=p.get("width"),
                  bandwidth=p.get("bandwidth"), scale=float(p.get("scale", 1.0)))
    f = _object_values(_require(section, "object", "system"), grid, "system.object")
    df = _object_values(_require(section, "perturbation", "system"), grid, "system.perturbation")
    space = _space(section.get("space"), AttributeSpace.interval(grid.lower, grid.upper))
    if space.dim != 1:
        raise ConfigError("system sections support one-dimensional attribute spaces only")
    return psf, grid, f, df, space


def load_config(path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    has_model, has_system = "model" in cfg, "system" in cfg
    if has_model == has_system:
        raise ConfigError("config needs exactly one of 'model' or 'system'")
    return cfg


def _nodes(cfg: dict, override) -> int:
    if override is not None:
        return int(override)
    return int(cfg.get("quadrature", {}).get("nodes_per_axis", DEFAULT_NODES_PER_AXIS))


def _task(cfg: dict, name: str) -> dict:
    task = cfg.get("task", {})
    kind = task.get("kind")
    if kind is not None and kind != name:
        raise ConfigError(f"config task.kind is {kind!r}, command is {name!r}")
    return task


def _report_payload(rep: LossReport) -> dict:
    d = rep.to_dict()
    d["routes_agree"] = rep.routes_agree()
    return d


def _detect_payload(quadform: float) -> dict:
    d = math.sqrt(max(quadform, 0.0))
    det = auc_from_detectability(d)
    return {"d_squared": quadform, "d": det.d, "auc": det.auc}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_analyze(cfg: dict, out: Path, nodes=None) -> int:
    task = _task(cfg, "analyze")
    n = _nodes(cfg, nodes)
    if "model" in cfg:
        model, theta = build_model(cfg["model"])
        scheme = build_scheme(cfg.get("binning"), model.space)
        rule = build_rule(model.space, scheme, n)
        delta = _numbers(_require(task, "delta_theta", "task"), "task.delta_theta")
        f_lm = fim_list_mode(model, theta, rule)
        f_b = fim_binned(model, theta, scheme, rule)
        diff = fim_difference(model, theta, scheme, rule)
        rep = loss_quadform(model, theta, delta, scheme, rule)
        extra = {}
        if "covariance" in task:
            extra["average_loss_trace"] = average_loss_trace(
                model, theta, scheme, rule, _numbers(task["covariance"], "task.covariance", 2))
    else:
        psf, grid, f, df, space = build_system(cfg["system"])
        scheme = build_scheme(cfg.get("binning"), space)
        rule = build_rule(space, scheme, n)
        op = build_convolution_operator(psf, grid, rule)
        f_lm, f_b = fim_object(op, scheme, rule, f)
        diff = f_lm - f_b
        rep = loss_object(op, scheme, rule, f, df)
        extra = {}
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "fim_list_mode.json", matrix_payload(f_lm))
    write_json(out / "fim_binned.json", matrix_payload(f_b))
    write_json(out / "fim_difference.json", matrix_payload(diff))
    write_json(out / "loss_report.json", {**_report_payload(rep), **extra})
    write_json(out / "detectability.json", {
        "list_mode": _detect_payload(rep.quadform_lm),
        "binned": _detect_payload(rep.quadform_binned),
    })
    return EXIT_OK


def _sweep_counts(task: dict, dim: int) -> list[tuple[int, ...]]:
    raw = _require(task, "bin_counts", "task")
    out = []
    for c in raw:
        c = tuple(int(x) for x in np.atleast_1d(c))
        if len(c) == 1 and dim > 1:
            c = c * dim
        if len(c) != dim or min(c) < 1:
            raise ConfigError("field 'task.bin_counts' entries must be >= 1 per axis")
        out.append(c)
    if not out:
        raise ConfigError("field 'task.bin_counts' is empty")
    return out


def _shared_rule(space, counts_list, n):
    """One fine rule refining every sweep grid, or ``None`` if it would be too big."""
    lcm = tuple(int(np.lcm.reduce([c[j] for c in counts_list])) for j in range(space.dim))
    if int(np.prod(lcm)) > _MAX_SHARED_CELLS:
        return None
    return build_rule(space, uniform_grid(space, lcm), n)


def cmd_sweep_bins(cfg: dict, out: Path, nodes=None) -> int:
    task = _task(cfg, "sweep-bins")
    n = _nodes(cfg, nodes)
    if "model" in cfg:
        model, theta = build_model(cfg["model"])
        space = model.space
        delta = _numbers(_require(task, "delta_theta", "task"), "task.delta_theta")
    else:
        psf, grid, f, df, space = build_system(cfg["system"])
    counts_list = _sweep_counts(task, space.dim)
    fine = _shared_rule(space, counts_list, n)
    rows = []
    prev = None
    for counts in counts_list:
        scheme = uniform_grid(space, counts)
        rule = rebin_rule(fine, scheme) if fine is not None else build_rule(space, scheme, n)
        if "model" in cfg:
            rep = loss_quadform(model, theta, delta, scheme, rule)
        else:
            rep = loss_object(build_convolution_operator(psf, grid, rule), scheme, rule, f, df)
        loss = rep.loss_per_bin_total
        ratio = prev / loss if prev is not None and loss > 0 and prev > 0 else None
        rows.append([scheme.n_bins, rep.quadform_lm, rep.quadform_binned, loss, ratio])
        prev = loss
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "sweep_bins.csv", ["M", "quadform_lm", "quadform_binned", "loss", "ratio"], rows)
    return EXIT_OK


def cmd_conv_example(cfg: dict, out: Path, nodes=None) -> int:
    task = _task(cfg, "conv-example")
    if "system" not in cfg:
        raise ConfigError("conv-example needs a 'system' section")
    n = _nodes(cfg, nodes)
    psf, grid, f, df, space = build_system(cfg["system"])
    length = float(space.widths[0])
    b_nyq = float(task.get("bandwidth", psf.bandwidth or 0.0))
    if not b_nyq > 0:
        raise ConfigError("missing field 'task.bandwidth'")
    m_nyq = length * b_nyq
    if abs(m_nyq - round(m_nyq)) > 1e-9:
        raise ConfigError("Nyquist binning needs L * B to be an integer")
    nyq_scheme = uniform_grid(space, [int(round(m_nyq))])
    nyq_rule = build_rule(space, nyq_scheme, n)
    nyq_psf = PsfSpec("bandlimited-sinc", bandwidth=b_nyq, scale=psf.scale)
    nyq = loss_object(build_convolution_operator(nyq_psf, grid, nyq_rule), nyq_scheme, nyq_rule, f, df)

    alpha = float(task.get("alpha", 0.5))
    one = uniform_grid(space, [1])
    one_rule = build_rule(space, one, n)
    control = loss_object(build_convolution_operator(nyq_psf, grid, one_rule), one, one_rule, f, alpha * f)
    control_nyq = loss_object(build_convolution_operator(nyq_psf, grid, nyq_rule), nyq_scheme, nyq_rule,
                              f, alpha * f)

    sweep_scheme = build_scheme(cfg.get("binning"), space) if "binning" in cfg else nyq_scheme
    sweep_rule = build_rule(space, sweep_scheme, n)
    dx = length / sweep_scheme.n_bins
    rows = []
    for b in task.get("b_sweep", [b_nyq / 2, b_nyq, 2 * b_nyq]):
        b = float(b)
        op = build_convolution_operator(PsfSpec("bandlimited-sinc", bandwidth=b, scale=psf.scale),
                                        grid, sweep_rule)
        rep = loss_object(op, sweep_scheme, sweep_rule, f, df)
        rows.append([b, sweep_scheme.n_bins, dx, b * dx, rep.quadform_lm, rep.quadform_binned,
                     rep.loss_per_bin_total])
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "conv_report.json", {
        "nyquist": {"bandwidth": b_nyq, "M": nyq_scheme.n_bins, "dx": length / nyq_scheme.n_bins,
                    "report": _report_payload(nyq)},
        "alpha_control": {"alpha": alpha,
                          "single_bin": _report_payload(control),
                          "nyquist_bins": _report_payload(control_nyq)},
    })
    write_csv(out / "b_sweep.csv",
              ["B", "M", "dx", "B_dx", "quadform_lm", "quadform_binned", "loss"], rows)
    return EXIT_OK


def cmd_mc_validate(cfg: dict, out: Path, nodes=None, seed=None) -> int:
    task = _task(cfg, "mc-validate")
    if "model" not in cfg:
        raise ConfigError("mc-validate needs a 'model' section")
    n = _nodes(cfg, nodes)
    model, theta = build_model(cfg["model"])
    scheme = build_scheme(cfg.get("binning"), model.space)
    rule = build_rule(model.space, scheme, n)
    if seed is None:
        seed = int(task.get("seed", cfg.get("seed", 0)))
    n_trials = int(task.get("n_trials", 200))
    ref = task.get("reference_theta")
    ref = None if ref is None else _numbers(ref, "task.reference_theta")
    check = empirical_mean_check(model, theta, scheme, rule, n_trials, seed,
                                 reference_theta=ref, gate=float(task.get("gate", 5.0)))
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "mc_report.json", {
        "seed": seed,
        "n_trials": n_trials,
        "max_abs_z": check.max_abs_z,
        "gate": check.gate,
        "counts_conserved": check.counts_conserved,
        "passed": check.passed,
        "expected": check.expected,
        "empirical": check.empirical,
        "z": check.z,
    })
    write_csv(out / "z_scores.csv", ["bin", "expected", "empirical", "z"],
              [[m, e, x, z] for m, (e, x, z) in enumerate(zip(check.expected, check.empirical, check.z))])
    if task.get("export_events"):
        write_events(out / "events.txt", sample_list(model, theta, rule, seed))
    return EXIT_OK if check.passed else EXIT_GATE


COMMANDS = {
    "analyze": cmd_analyze,
    "sweep-bins": cmd_sweep_bins,
    "conv-example": cmd_conv_example,
    "mc-validate": cmd_mc_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="binloss", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", required=True, type=Path)
        p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        p.add_argument("--nodes", type=int, default=None, help="overrides quadrature.nodes_per_axis")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.command == "mc-validate":
            return cmd_mc_validate(cfg, args.out, args.nodes, args.seed)
        return COMMANDS[args.command](cfg, args.out, args.nodes)
    except EnvelopeExceededError as e:
        print(f"binloss {args.command}: montecarlo: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    except DomainError as e:
        print(f"binloss {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    except BinLossError as e:
        print(f"binloss {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
