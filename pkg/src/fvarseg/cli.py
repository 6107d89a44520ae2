"""Command-line interface.

Four subcommands cover the workflow: ``simulate`` writes synthetic
panels with a ground-truth sidecar, ``segment`` runs the two-stage
pipeline on a CSV panel, ``calibrate`` fits threshold models from
change-free simulations, and ``evaluate`` scores the pipeline over
seeded Monte Carlo replicates.  Exit codes: 0 success, 2 configuration
error, 3 data error, 4 numerical-consistency failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from fvarseg.errors import FvarsegError

SCHEMA_VERSION = 1


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    import yaml

    from fvarseg.errors import ConfigurationError

    try:
        with open(path) as fh:
            payload = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"could not parse config {path}: {exc}") from None
    if payload is None:
        return {}
    if not isinstance(payload, dict):
        raise ConfigurationError(f"config {path} must hold a mapping at top level")
    return payload


def _setting(args, config: dict, name: str, default=None):
    value = getattr(args, name, None)
    if value is not None:
        return value
    return config.get(name, default)


# -- simulate ----------------------------------------------------------


def cmd_simulate(args) -> int:
    from fvarseg.dgp import gen_dataset, scenario_spec
    from fvarseg.serialize import dump_json, write_panel_csv

    config = _load_config(args.config)
    scenario = _setting(args, config, "scenario", "M1")
    spec = scenario_spec(
        scenario,
        n=int(_setting(args, config, "n", 2000)),
        p=int(_setting(args, config, "p", 50)),
        seed=int(_setting(args, config, "seed", 0)),
        n_changes=_setting(args, config, "n_changes"),
        d=_setting(args, config, "var_order"),
    )
    dataset = gen_dataset(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data_path = out / "data.csv"
    truth_path = out / "truth.json"
    write_panel_csv(data_path, dataset.X.values)
    dump_json({"schema_version": SCHEMA_VERSION, **dataset.truth}, truth_path)
    print(
        f"simulated scenario {spec.scenario}: n={spec.n} p={spec.p} "
        f"chi_changes={list(spec.chi_changes)} xi_changes={list(spec.xi_changes)} "
        f"-> {data_path}, {truth_path}"
    )
    return 0


# -- segment -----------------------------------------------------------


def _resolve_threshold_setting(setting, no_factor: bool):
    from fvarseg.errors import ConfigurationError
    from fvarseg.serialize import load_json
    from fvarseg.tuning import CalibrationResult

    if setting is None or setting == "default":
        return "default"
    if isinstance(setting, str) and setting.startswith("model:"):
        payload = load_json(setting[len("model:") :])
        return CalibrationResult.from_dict(payload)
    if isinstance(setting, str):
        parts = {}
        for piece in setting.split(","):
            key, _, value = piece.partition("=")
            if key.strip() not in ("kappa", "pi") or not value:
                raise ConfigurationError(
                    f"cannot parse thresholds {setting!r}; expected 'default', "
                    "'model:<path>' or 'kappa=<x>,pi=<y>'"
                )
            parts[key.strip()] = float(value)
        return parts
    if isinstance(setting, dict):
        return setting
    raise ConfigurationError(f"unsupported thresholds setting {setting!r}")


def cmd_segment(args) -> int:
    from fvarseg.segmenter import FactorVarSegmenter
    from fvarseg.serialize import dump_json, read_panel_csv

    config = _load_config(args.config)
    orientation = _setting(args, config, "orientation", "columns")
    panel = read_panel_csv(args.input, orientation=orientation)
    no_factor = bool(args.no_factor or config.get("no_factor", False))
    thresholds = _resolve_threshold_setting(
        _setting(args, config, "thresholds", "default"), no_factor
    )
    bandwidths = config.get("bandwidths", "auto")
    if isinstance(bandwidths, dict):
        bandwidths = (bandwidths["factor"], bandwidths["var"])
    segmenter = FactorVarSegmenter(
        var_order=int(_setting(args, config, "var_order", 1)),
        factor="none" if no_factor else "auto",
        bandwidths=bandwidths,
        thresholds=thresholds,
        lam=_setting(args, config, "lam", "cv"),
        q=config.get("q"),
        eta_factor=float(_setting(args, config, "eta_factor", 0.5)),
        eta_var=float(_setting(args, config, "eta_var", 0.0)),
        demean=not bool(args.no_demean or config.get("no_demean", False)),
        n_jobs=int(_setting(args, config, "workers", 1)),
    )
    segmenter.fit(panel.T)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dump_json(segmenter.results_dict(), out / "changepoints.json")
    for G, trace in segmenter.factor_traces_.items():
        trace.to_csv(out / f"factor_trace_G{G}.csv")
    for G, result in segmenter.var_traces_.items():
        result.trace_to_csv(out / f"var_trace_G{G}.csv")
        dump_json(
            {"schema_version": SCHEMA_VERSION, "G": G,
             "estimates": result.estimates_to_records()},
            out / f"var_estimates_G{G}.json",
        )
    if segmenter.segment_models_ is not None:
        for k, model in enumerate(segmenter.segment_models_):
            model.acv_to_csv(out / f"segment_acv_{k}.csv")
    chi = [cp.location for cp in segmenter.factor_points_]
    xi = [cp.location for cp in segmenter.var_points_]
    print(f"factor changes: {chi}")
    print(f"var changes:    {xi}")
    print(f"results written to {out}")
    return 0


# -- calibrate ---------------------------------------------------------


def cmd_calibrate(args) -> int:
    from fvarseg.errors import ConfigurationError
    from fvarseg.serialize import dump_json
    from fvarseg.tuning import calibrate_thresholds

    config = _load_config(args.config)
    cells = config.get("cells")
    if not cells:
        raise ConfigurationError(
            "calibration config must list grid cells under 'cells'"
        )
    result = calibrate_thresholds(
        cells,
        B=int(_setting(args, config, "B", 50)),
        tau=float(_setting(args, config, "tau", 0.05)),
        seed=int(_setting(args, config, "seed", 0)),
        n_jobs=int(_setting(args, config, "workers", 1)),
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    dump_json(result.to_dict(), out)
    print(f"factor-stage threshold fit: R2_adj = {result.factor_model.r2_adj:.4f}")
    print(f"var-stage threshold fit:    R2_adj = {result.var_model.r2_adj:.4f}")
    print(f"model written to {out}")
    return 0


# -- evaluate ----------------------------------------------------------


def cmd_evaluate(args) -> int:
    import csv

    from fvarseg.dgp import scenario_spec
    from fvarseg.errors import ConfigurationError
    from fvarseg.metrics import run_experiment
    from fvarseg.segmenter import FactorVarSegmenter
    from fvarseg.serialize import FLOAT_FMT, dump_json

    config = _load_config(args.config)
    cells = config.get("cells")
    if not cells:
        raise ConfigurationError("evaluation config must list cells under 'cells'")
    method = config.get("method", {})
    workers = int(_setting(args, config, "workers", 1))
    replicates = int(_setting(args, config, "replicates", 50))
    seed = int(_setting(args, config, "seed", 0))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    thresholds = _resolve_threshold_setting(method.get("thresholds"), False)

    summaries = []
    for idx, cell in enumerate(cells):
        spec = scenario_spec(
            cell.get("scenario", "M3"),
            n=int(cell.get("n", 1000)),
            p=int(cell.get("p", 20)),
            n_changes=cell.get("n_changes"),
            d=cell.get("var_order"),
        )
        if "beta_decay" in cell:
            spec = replace(spec, beta_decay=float(cell["beta_decay"]))

        def factory():
            return FactorVarSegmenter(
                var_order=spec.d,
                factor="none" if spec.chi_model is None else "auto",
                thresholds=thresholds,
                n_jobs=1,
            )

        report = run_experiment(
            spec, factory, replicates, seed=seed, n_jobs=workers
        )
        summary = report.aggregate()
        summaries.append(summary)
        dump_json(
            {
                "schema_version": SCHEMA_VERSION,
                "summary": summary,
                "replicates": report.replicates,
                "failures": report.failures,
            },
            out / f"cell{idx}_report.json",
        )
    with open(out / "report.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["scenario", "n", "p", "stage", "<=-2", "-1", "0", "1", ">=2",
             "mean_hausdorff", "mean_runtime_sec"]
        )
        for summary in summaries:
            for stage in ("factor", "var"):
                dist = summary.get(f"{stage}_k_distribution")
                if dist is None:
                    continue
                writer.writerow(
                    [
                        summary["cell"]["scenario"],
                        summary["cell"]["n"],
                        summary["cell"]["p"],
                        stage,
                        *[dist[b] for b in ("<=-2", "-1", "0", "1", ">=2")],
                        FLOAT_FMT % summary[f"{stage}_mean_hausdorff"],
                        FLOAT_FMT % summary["mean_runtime_sec"],
                    ]
                )
    print(f"evaluation reports written to {out}")
    return 0


# -- entry point -------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fvarseg",
        description=(
            "Two-stage change point detection for high-dimensional panels "
            "with a factor-driven and a sparse VAR component."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic panel + truth")
    sim.add_argument("--scenario", help="M1, M2 or M3")
    sim.add_argument("--n", type=int)
    sim.add_argument("--p", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--n-changes", dest="n_changes", type=int)
    sim.add_argument("--var-order", dest="var_order", type=int)
    sim.add_argument("--config")
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=cmd_simulate)

    seg = sub.add_parser("segment", help="run the two-stage pipeline on a CSV panel")
    seg.add_argument("--input", required=True)
    seg.add_argument("--out", required=True)
    seg.add_argument("--config")
    seg.add_argument("--no-factor", action="store_true",
                     help="treat the panel as the VAR process (skip the factor stage)")
    seg.add_argument("--thresholds",
                     help="'default', 'model:<path>' or 'kappa=<x>,pi=<y>'")
    seg.add_argument("--var-order", dest="var_order", type=int)
    seg.add_argument("--eta-factor", dest="eta_factor", type=float)
    seg.add_argument("--eta-var", dest="eta_var", type=float)
    seg.add_argument("--orientation", choices=["columns", "rows"],
                     help="columns: series in columns (default); rows: series in rows")
    seg.add_argument("--no-demean", action="store_true")
    seg.add_argument("--workers", type=int)
    seg.set_defaults(func=cmd_segment)

    cal = sub.add_parser("calibrate", help="fit threshold models from null simulations")
    cal.add_argument("--config", required=True)
    cal.add_argument("--out", required=True)
    cal.add_argument("--B", type=int)
    cal.add_argument("--tau", type=float)
    cal.add_argument("--seed", type=int)
    cal.add_argument("--workers", type=int)
    cal.set_defaults(func=cmd_calibrate)

    ev = sub.add_parser("evaluate", help="Monte Carlo scoring of the pipeline")
    ev.add_argument("--config", required=True)
    ev.add_argument("--out", required=True)
    ev.add_argument("--replicates", type=int)
    ev.add_argument("--seed", type=int)
    ev.add_argument("--workers", type=int)
    ev.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FvarsegError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return getattr(exc, "exit_code", 2)


if __name__ == "__main__":
    sys.exit(main())
