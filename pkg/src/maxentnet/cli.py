"""Command-line interface: fit, expect, sample, compare, synth.

A config file holds `key = value` lines mirroring the long flag names;
explicit flags override config values. Exit codes: 0 success, 2 validation
or infeasibility, 3 I/O, 4 non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import _kernels, analytics, gravity, solver, synth
from .graph import (
    GraphInputError,
    NodeAttributes,
    load_attributes,
    load_distance_matrix,
    load_graph,
)
from .solver import FittedModel, InfeasibleConstraintsError, SolverConfig
from .statistics import DomainError, DivergenceError, ModelValidationError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_NO_CONVERGENCE = 4

MODELS = ("er", "bcm", "wcm", "bounded", "mixed", "fitness", "fitness-dist", "gravity")


class CliValidationError(ValueError):
    pass


def _read_config(path):
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CliValidationError(f"{path}:{lineno}: expected key = value")
            key, val = (part.strip() for part in line.split("=", 1))
            values[key.replace("-", "_")] = val
    return values


def _apply_config(args, config):
    """Config fills in arguments the command line left unset."""
    casts = {
        "unit": float, "tol": float, "max_iter": int, "m": int, "seed": int,
        "wmax": int, "n": int, "z": float, "density": float, "gamma": float,
        "fitness_min": float, "fitness_max": float,
        "weight_scale": float, "weight_exponent": float,
        "threads": int, "with_gravity": lambda v: v.lower() in ("1", "true", "yes"),
    }
    for key, raw in config.items():
        if not hasattr(args, key):
            continue
        if getattr(args, key) is None or (key == "with_gravity" and getattr(args, key) is False):
            cast = casts.get(key, str)
            setattr(args, key, cast(raw))
    return args


def _add_common(p):
    p.add_argument("--config", help="key = value file mirroring these flags")
    p.add_argument("--edges", help="edge list CSV (src,dst,weight)")
    p.add_argument("--attrs", help="node attributes CSV (node,fitness[,lat,lon])")
    p.add_argument("--distances", help="distance matrix CSV with labels")
    p.add_argument("--unit", type=float, default=None, help="weight quantization unit (default 1)")
    p.add_argument("--out", default=None, help="output directory (default .)")
    p.add_argument("--threads", type=int, default=None,
                   help="cap on worker threads (computation is single-threaded)")


def _add_model(p, required=False):
    p.add_argument("--model", choices=MODELS, required=required)
    p.add_argument("--model-file", help="previously fitted model JSON")
    p.add_argument("--wmax", type=int, default=None, help="bounded-family weight cap")
    p.add_argument("--tol", type=float, default=None, help="solver tolerance (default 1e-10)")
    p.add_argument("--max-iter", type=int, default=None, dest="max_iter")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="maxentnet",
        description="Fit maximum-entropy ensembles and gravity baselines to weighted networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a model to an observed network")
    _add_common(p_fit)
    _add_model(p_fit, required=False)
    p_fit.set_defaults(func=cmd_fit)

    p_expect = sub.add_parser("expect", help="analytic expected metrics under a fitted model")
    _add_common(p_expect)
    _add_model(p_expect)
    p_expect.set_defaults(func=cmd_expect)

    p_sample = sub.add_parser("sample", help="Monte Carlo sampling of a fitted ensemble")
    _add_common(p_sample)
    _add_model(p_sample)
    p_sample.add_argument("--m", type=int, default=None, help="number of sampled graphs")
    p_sample.add_argument("--seed", type=int, default=None)
    p_sample.set_defaults(func=cmd_sample)

    p_cmp = sub.add_parser("compare", help="observed vs expected comparison report")
    _add_common(p_cmp)
    _add_model(p_cmp)
    p_cmp.add_argument("--with-gravity", action="store_true", dest="with_gravity")
    p_cmp.set_defaults(func=cmd_compare)

    p_synth = sub.add_parser("synth", help="generate a synthetic trade-like network")
    _add_common(p_synth)
    p_synth.add_argument("--n", type=int, default=None)
    p_synth.add_argument("--z", type=float, default=None)
    p_synth.add_argument("--density", type=float, default=None)
    p_synth.add_argument("--gamma", type=float, default=None)
    p_synth.add_argument("--fitness-min", type=float, default=None, dest="fitness_min")
    p_synth.add_argument("--fitness-max", type=float, default=None, dest="fitness_max")
    p_synth.add_argument("--weight-scale", type=float, default=None, dest="weight_scale")
    p_synth.add_argument("--weight-exponent", type=float, default=None, dest="weight_exponent")
    p_synth.add_argument("--seed", type=int, default=None)
    p_synth.set_defaults(func=cmd_synth)

    return parser


def _load_inputs(args, need_edges=True, need_attrs=False):
    if need_edges and not args.edges:
        raise CliValidationError("--edges is required")
    attrs = None
    if args.attrs:
        attrs = load_attributes(args.attrs)
        if args.distances:
            labels, mat = load_distance_matrix(args.distances)
            attrs = NodeAttributes(
                labels=attrs.labels,
                fitness=attrs.fitness,
                positions=attrs.positions,
                distances=NodeAttributes(labels, np.ones(len(labels)), distances=mat)
                .reindex(attrs.labels)
                .distances,
            )
    elif need_attrs:
        raise CliValidationError("--attrs is required for this model")
    g = None
    if args.edges:
        unit = args.unit if args.unit is not None else 1.0
        isolated = attrs.labels if attrs is not None else ()
        g = load_graph(args.edges, unit=unit, isolated=isolated)
        if attrs is not None:
            attrs = attrs.reindex(g.labels)
    return g, attrs


def _solver_config(args):
    cfg = SolverConfig()
    if getattr(args, "tol", None) is not None:
        cfg = SolverConfig(tolerance=args.tol, max_iterations=cfg.max_iterations)
    if getattr(args, "max_iter", None) is not None:
        cfg = SolverConfig(tolerance=cfg.tolerance, max_iterations=args.max_iter)
    return cfg


def _fit_model(model, g, attrs, cfg, wmax):
    from .graph import degree, strength

    if model in ("fitness", "fitness-dist") and attrs is None:
        raise CliValidationError(f"--attrs is required for model {model}")
    if model == "fitness-dist" and attrs is not None:
        attrs.distance_matrix()  # validates availability up front
    if model == "er":
        return solver.solve_er(g, cfg)
    if model == "bcm":
        return solver.solve_bcm(degree(g), cfg)
    if model == "wcm":
        return solver.solve_wcm(strength(g), cfg)
    if model == "bounded":
        if wmax is None:
            raise CliValidationError("--wmax is required for the bounded model")
        return solver.solve_bounded(strength(g), wmax, cfg)
    if model == "mixed":
        return solver.solve_mixed(degree(g), strength(g), cfg)
    if model == "fitness":
        return solver.fit_fitness(g, attrs, with_distance=False, cfg=cfg)
    if model == "fitness-dist":
        return solver.fit_fitness(g, attrs, with_distance=True, cfg=cfg)
    raise CliValidationError(f"model {model!r} cannot be fitted here")


def _obtain_model(args, g, attrs):
    if args.model_file:
        return FittedModel.from_json(args.model_file)
    if not args.model:
        raise CliValidationError("supply --model for an inline fit or --model-file")
    fm = _fit_model(args.model, g, attrs, _solver_config(args), args.wmax)
    if not fm.converged:
        raise _NonConvergence(fm)
    return fm


class _NonConvergence(Exception):
    def __init__(self, fm):
        self.fm = fm
        super().__init__(fm.diagnosis or "solver did not converge")


def _outdir(args):
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def cmd_fit(args):
    need_attrs = args.model in ("fitness", "fitness-dist", "gravity")
    g, attrs = _load_inputs(args, need_attrs=need_attrs)
    if not args.model:
        raise CliValidationError("--model is required")
    out = _outdir(args)
    if args.model == "gravity":
        fit = gravity.fit_gravity(g, attrs)
        path = os.path.join(out, "gravity.json")
        fit.to_json(path)
        print(f"gravity fit: lnK={fit.lnK:.6g} alpha={fit.alpha:.6g} "
              f"gamma={fit.gamma:.6g} r2={fit.r_squared:.6g} -> {path}")
        return EXIT_OK
    fm = _fit_model(args.model, g, attrs, _solver_config(args), args.wmax)
    path = os.path.join(out, "model.json")
    fm.to_json(path)
    print(f"model={args.model} converged={fm.converged} iterations={fm.iterations} "
          f"max_residual={fm.max_residual():.3e} -> {path}")
    if fm.diagnosis:
        print(f"diagnosis: {fm.diagnosis}", file=sys.stderr)
    return EXIT_OK if fm.converged else EXIT_NO_CONVERGENCE


def cmd_expect(args):
    g, attrs = _load_inputs(args)
    fm = _obtain_model(args, g, attrs)
    em = analytics.expected_metrics(fm, attrs)
    out = _outdir(args)
    path = os.path.join(out, "expected_metrics.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["node", "metric", "value"])
        for metric in analytics.METRIC_NAMES + ("snn_norm",):
            if metric == "snn_norm":
                wtot = em.expected_total_weight
                vals = em.snn / wtot if wtot > 0 else [float("nan")] * len(g.labels)
            else:
                vals = getattr(em, metric)
                if vals is None:
                    vals = [float("nan")] * len(g.labels)
            for label, v in zip(g.labels, vals):
                writer.writerow([label, metric, analytics._fmt(v)])
    print(f"expected metrics for {em.family} (density={em.expected_density:.4f}) -> {path}")
    return EXIT_OK


def cmd_sample(args):
    g, attrs = _load_inputs(args)
    fm = _obtain_model(args, g, attrs)
    m = args.m if args.m is not None else 1000
    seed = args.seed if args.seed is not None else 0
    ss = analytics.sample(fm, m, seed, attrs)
    out = _outdir(args)
    csv_path = os.path.join(out, "samples.csv")
    json_path = os.path.join(out, "samples_summary.json")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["node", "metric", "mean", "sem", "count"])
        for metric in analytics.METRIC_NAMES:
            for i, label in enumerate(g.labels):
                writer.writerow([
                    label, metric,
                    analytics._fmt(ss.means[metric][i]),
                    analytics._fmt(ss.sems[metric][i]),
                    int(ss.counts[metric][i]),
                ])
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(
            {"family": ss.family, "seed": ss.seed, "m": ss.m,
             "l_mean": ss.l_mean, "l_sem": ss.l_sem},
            fh, sort_keys=True, indent=2,
        )
        fh.write("\n")
    print(f"sampled m={m} graphs (seed={seed}): mean L={ss.l_mean:.3f} -> {csv_path}")
    return EXIT_OK


def cmd_compare(args):
    g, attrs = _load_inputs(args, need_attrs=bool(args.with_gravity))
    fm = _obtain_model(args, g, attrs)
    grav = None
    if args.with_gravity:
        grav = gravity.fit_gravity(g, attrs)
    report = analytics.compare(g, fm, grav=grav, attrs=attrs)
    out = _outdir(args)
    csv_path, json_path = analytics.emit_report(report, out)
    corr = report.summary["correlations"]
    parts = " ".join(f"{k}={v:.4f}" if v == v else f"{k}=nan" for k, v in corr.items())
    print(f"model={report.summary['model']} correlations: {parts}")
    print(f"observed_density={report.summary['observed_density']:.4f} "
          f"expected_density={report.summary['expected_density']:.4f} -> {csv_path}")
    return EXIT_OK


def cmd_synth(args):
    if args.n is None:
        raise CliValidationError("--n is required for synth")
    seed = args.seed if args.seed is not None else 0
    g, attrs, z = synth.generate(
        n=args.n,
        seed=seed,
        z=args.z,
        density=args.density if args.z is None and args.density is not None else (
            None if args.z is not None else 0.55
        ),
        fitness_min=args.fitness_min if args.fitness_min is not None else 0.05,
        fitness_max=args.fitness_max if args.fitness_max is not None else 20.0,
        gamma=args.gamma,
        weight_scale=args.weight_scale if args.weight_scale is not None else 8.0,
        weight_exponent=args.weight_exponent if args.weight_exponent is not None else 1.4,
    )
    out = _outdir(args)
    edges_path = os.path.join(out, "edges.csv")
    attrs_path = os.path.join(out, "attrs.csv")
    synth.write_edges_csv(g, edges_path)
    synth.write_attributes_csv(attrs, attrs_path)
    from .graph import density as graph_density

    print(f"synthetic network n={g.n} density={graph_density(g):.4f} z={z:.6g} "
          f"-> {edges_path}, {attrs_path}")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "config", None):
            args = _apply_config(args, _read_config(args.config))
        if getattr(args, "threads", None) is not None and args.threads < 1:
            raise CliValidationError("--threads must be >= 1")
        return args.func(args)
    except _NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except (OSError, IOError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (
        CliValidationError,
        GraphInputError,
        ModelValidationError,
        InfeasibleConstraintsError,
        DomainError,
        DivergenceError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
