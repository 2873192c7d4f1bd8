"""Ensemble analytics: plug-in expected metrics, exact Monte Carlo sampling,
and observed-vs-expected comparison reports.

Expected higher-order metrics use the plug-in estimator: substitute the
per-pair connection probabilities for adjacency entries and the expected
weights for weights in each metric's defining formula. For ratio metrics this
is not the exact ensemble average, so the sampler provides an independent
Monte Carlo cross-check; every report records the estimator used.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .graph import WeightedGraph
from .solver import FittedModel
from .statistics import ModelSpec, ModelValidationError, PairStatistics, pair_statistics

METRIC_NAMES = ("k", "s", "knn", "snn", "c", "cw")

# Metrics reported per family in comparison reports.
_BINARY_METRICS = ("knn", "c")
_WEIGHTED_METRICS = ("knn", "c", "snn", "cw")


@dataclass
class ExpectedMetrics:
    """Plug-in per-node expectations under a fitted ensemble."""

    family: str
    k: np.ndarray
    s: np.ndarray
    knn: np.ndarray
    snn: np.ndarray
    c: np.ndarray
    cw: np.ndarray | None
    expected_total_weight: float
    expected_density: float

    def as_dict(self):
        out = {name: getattr(self, name) for name in METRIC_NAMES}
        return out


def _metrics_from_matrices(p, ew, wtot=None):
    if wtot is None:
        wtot = ew.sum() / 2.0
    if wtot > 0:
        k, s, knn, snn, c, cw = _kernels.node_metrics(p, ew, wtot)
    else:
        k, s, knn, snn, c, _ = _kernels.node_metrics(p, ew, 1.0)
        cw = None
    return k, s, knn, snn, c, cw, wtot


def expected_metrics(fm: FittedModel, attrs=None) -> ExpectedMetrics:
    """Analytic plug-in expectations of all per-node metrics."""
    stats = pair_statistics(fm.spec, attrs)
    n = stats.p.shape[0]
    k, s, knn, snn, c, cw, wtot = _metrics_from_matrices(stats.p, stats.ew)
    dens = stats.p.sum() / (n * (n - 1))
    return ExpectedMetrics(
        family=fm.spec.family,
        k=k, s=s, knn=knn, snn=snn, c=c, cw=cw,
        expected_total_weight=float(wtot),
        expected_density=float(dens),
    )


# ---------------------------------------------------------------------------
# Sampling.
#
# Stream-splitting rule: SeedSequence(seed).spawn(m) yields one independent
# child stream per sample index; within a sample, the i<j pair block is drawn
# in one vectorized call in fixed row-major order. Results are therefore
# reproducible and independent of any parallelization over samples.

def _pair_sampler(spec: ModelSpec, attrs=None):
    stats = pair_statistics(spec, attrs)
    n = stats.p.shape[0]
    iu = np.triu_indices(n, k=1)
    fam = spec.family

    if fam in ("er", "bcm", "fitness", "fitness-dist"):
        pv = stats.p[iu]

        def draw(rng):
            return (rng.random(pv.shape) < pv).astype(np.float64)

    elif fam == "wcm":
        yv = np.outer(spec.y, spec.y)[iu]
        logy = np.where(yv > 0, np.log(yv), -np.inf)

        def draw(rng):
            u = rng.random(yv.shape)
            with np.errstate(divide="ignore", invalid="ignore"):
                w = np.floor(np.log(u) / logy)
            return np.where(yv > 0, w, 0.0)

    elif fam == "bounded":
        m_max = int(spec.w_max)
        yv = np.outer(spec.y, spec.y)[iu]
        logy = np.where((yv > 0) & (yv != 1.0), np.log(yv), np.nan)
        at_one = yv == 1.0

        def draw(rng):
            u = rng.random(yv.shape)
            with np.errstate(divide="ignore", invalid="ignore"):
                w = np.floor(np.log1p(-u * -np.expm1((m_max + 1) * logy)) / logy)
            w = np.where(at_one, np.floor(u * (m_max + 1)), w)
            w = np.where(yv > 0, w, 0.0)
            return np.clip(w, 0.0, m_max)

    elif fam == "mixed":
        xv = np.outer(spec.x, spec.x)[iu]
        yv = np.outer(spec.y, spec.y)[iu]
        d = 1.0 - yv + xv * yv
        av = xv * yv / d
        logy = np.where(yv > 0, np.log(yv), -np.inf)

        def draw(rng):
            link = rng.random(av.shape) < av
            u = rng.random(av.shape)
            with np.errstate(divide="ignore", invalid="ignore"):
                extra = np.floor(np.log(u) / logy)
            extra = np.where(np.isfinite(extra), extra, 0.0)
            return np.where(link, 1.0 + extra, 0.0)

    else:
        raise ModelValidationError(f"cannot sample family {fam!r}")

    return n, iu, draw


def sample_graphs(fm: FittedModel, m, seed, attrs=None):
    """Yield m weight matrices drawn from the fitted ensemble."""
    if m < 1:
        raise ValueError("m must be >= 1")
    fm.spec.validate()
    n, iu, draw = _pair_sampler(fm.spec, attrs)
    children = np.random.SeedSequence(seed).spawn(m)
    for child in children:
        rng = np.random.default_rng(child)
        wv = draw(rng)
        w = np.zeros((n, n))
        w[iu] = wv
        w += w.T
        yield w


@dataclass
class SampleSet:
    """Monte Carlo means and standard errors over sampled graphs."""

    family: str
    seed: int
    m: int
    means: dict
    sems: dict
    counts: dict
    l_mean: float
    l_sem: float

    def to_dict(self):
        return {
            "family": self.family,
            "seed": self.seed,
            "m": self.m,
            "l_mean": self.l_mean,
            "l_sem": self.l_sem,
            "means": {k: [float(x) for x in v] for k, v in self.means.items()},
            "sems": {k: [float(x) for x in v] for k, v in self.sems.items()},
            "counts": {k: [int(x) for x in v] for k, v in self.counts.items()},
        }


class _Welford:
    """NaN-aware running mean/variance per vector entry."""

    def __init__(self, n):
        self.count = np.zeros(n)
        self.mean = np.zeros(n)
        self.m2 = np.zeros(n)

    def add(self, values):
        ok = np.isfinite(values)
        self.count[ok] += 1
        delta = np.where(ok, values - self.mean, 0.0)
        self.mean += np.where(ok, delta / np.maximum(self.count, 1), 0.0)
        self.m2 += np.where(ok, delta * (values - self.mean), 0.0)

    def sem(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            var = self.m2 / (self.count - 1)
            out = np.sqrt(var / self.count)
        out[self.count < 2] = np.nan
        return out

    def result_mean(self):
        out = self.mean.copy()
        out[self.count == 0] = np.nan
        return out


def sample(fm: FittedModel, m, seed, attrs=None, metrics=METRIC_NAMES) -> SampleSet:
    """Monte Carlo estimate of per-node metrics plus the link count.

    Restricting `metrics` to ("k", "s") skips the cubic-time neighbourhood
    metrics per sample, which matters for large m.
    """
    metrics = tuple(metrics)
    unknown = set(metrics) - set(METRIC_NAMES)
    if unknown:
        raise ValueError(f"unknown metrics {sorted(unknown)}")
    structural = any(name in metrics for name in ("knn", "snn", "c", "cw"))
    n = fm.spec.size(attrs)
    accs = {name: _Welford(n) for name in metrics}
    l_acc = _Welford(1)
    for w in sample_graphs(fm, m, seed, attrs):
        adj = (w > 0).astype(np.float64)
        if structural:
            wtot = w.sum() / 2.0
            if wtot > 0:
                vals = dict(zip(METRIC_NAMES, _kernels.node_metrics(adj, w, wtot)))
            else:
                k, s, knn, snn, c, _ = _kernels.node_metrics(adj, w, 1.0)
                vals = dict(zip(METRIC_NAMES, (k, s, knn, snn, c, np.full(n, np.nan))))
        else:
            vals = {"k": adj.sum(axis=1), "s": w.sum(axis=1)}
        for name in metrics:
            accs[name].add(vals[name])
        l_acc.add(np.array([adj.sum() / 2.0]))
    return SampleSet(
        family=fm.spec.family,
        seed=seed,
        m=m,
        means={name: accs[name].result_mean() for name in metrics},
        sems={name: accs[name].sem() for name in metrics},
        counts={name: accs[name].count.astype(np.int64) for name in metrics},
        l_mean=float(l_acc.result_mean()[0]),
        l_sem=float(l_acc.sem()[0]),
    )


# ---------------------------------------------------------------------------
# Comparison reports.

@dataclass
class ComparisonReport:
    """Per-node observed vs expected metric table plus summary statistics."""

    labels: tuple
    metrics: tuple
    observed: dict
    expected: dict
    gravity: dict | None
    summary: dict = field(default_factory=dict)


def pearson(a, b):
    """Correlation over entries where both values are defined."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ok = np.isfinite(a) & np.isfinite(b)
    if ok.sum() < 2:
        return float("nan")
    av, bv = a[ok], b[ok]
    if av.std() == 0.0 or bv.std() == 0.0:
        return float("nan")
    return float(np.corrcoef(av, bv)[0, 1])


def compare_pairstats(
    g: WeightedGraph,
    stats: PairStatistics,
    family,
    grav_stats: PairStatistics | None = None,
    seed=None,
    m=None,
) -> ComparisonReport:
    """Comparison report from explicit per-pair statistics."""
    if stats.p.shape != (g.n, g.n):
        raise ModelValidationError("pair statistics size does not match graph size")
    metrics = _BINARY_METRICS if family in ("er", "bcm", "fitness", "fitness-dist") else _WEIGHTED_METRICS

    adj = g.adjacency()
    w_obs = g.weights.astype(np.float64)
    wtot_obs = g.total_weight()
    ok, os_, oknn, osnn, oc, ocw, _ = _metrics_from_matrices(adj, w_obs, wtot_obs or None)
    ek, es, eknn, esnn, ec, ecw, wtot_exp = _metrics_from_matrices(stats.p, stats.ew)

    observed = {"knn": oknn, "c": oc}
    expected = {"knn": eknn, "c": ec}
    if "snn" in metrics:
        # Convention: s^nn and c^w are rescaled by the total
        # weight: observed by the observed total, expected by the expected
        # total. The cross normalization (expected rescaled by the observed
        # total) is emitted as *_xnorm rows.
        observed["snn"] = osnn / wtot_obs if wtot_obs else np.full(g.n, np.nan)
        expected["snn"] = esnn / wtot_exp if wtot_exp else np.full(g.n, np.nan)
        observed["cw"] = ocw if ocw is not None else np.full(g.n, np.nan)
        expected["cw"] = ecw if ecw is not None else np.full(g.n, np.nan)
        scale = wtot_exp / wtot_obs if wtot_obs and wtot_exp else float("nan")
        observed["snn_xnorm"] = observed["snn"]
        expected["snn_xnorm"] = expected["snn"] * scale
        observed["cw_xnorm"] = observed["cw"]
        expected["cw_xnorm"] = expected["cw"] * scale
        metrics = metrics + ("snn_xnorm", "cw_xnorm")

    gravity = None
    grav_density = None
    if grav_stats is not None:
        gk, gs, gknn, gsnn, gc, gcw, gtot = _metrics_from_matrices(grav_stats.p, grav_stats.ew)
        gravity = {"knn": gknn, "c": gc}
        if "snn" in metrics:
            gravity["snn"] = gsnn / gtot if gtot else np.full(g.n, np.nan)
            gravity["cw"] = gcw if gcw is not None else np.full(g.n, np.nan)
            gravity["snn_xnorm"] = gravity["snn"] * (gtot / wtot_obs if wtot_obs else float("nan"))
            gravity["cw_xnorm"] = gravity["cw"] * (gtot / wtot_obs if wtot_obs else float("nan"))
        grav_density = float(grav_stats.p.sum() / (g.n * (g.n - 1)))

    summary = {
        "model": family,
        "estimator": "plug-in",
        "correlations": {name: pearson(observed[name], expected[name]) for name in metrics},
        "observed_density": g.link_count() / (g.n * (g.n - 1) / 2),
        "expected_density": float(stats.p.sum() / (g.n * (g.n - 1))),
        "observed_total_weight": float(wtot_obs),
        "expected_total_weight": float(wtot_exp),
        "seed": seed,
        "m": m,
    }
    if grav_density is not None:
        summary["gravity_expected_density"] = grav_density
        summary["gravity_complete_topology"] = grav_density == 1.0

    return ComparisonReport(
        labels=g.labels,
        metrics=tuple(metrics),
        observed={k: observed[k] for k in metrics},
        expected={k: expected[k] for k in metrics},
        gravity=None if gravity is None else {k: gravity[k] for k in metrics},
        summary=summary,
    )


def compare(g: WeightedGraph, fm: FittedModel, grav=None, attrs=None, seed=None, m=None):
    """Observed vs plug-in expected metrics, optionally with the gravity
    baseline as a degenerate complete-network reference."""
    stats = pair_statistics(fm.spec, attrs)
    grav_stats = None
    if grav is not None:
        from .gravity import predict_gravity

        grav_stats = predict_gravity(grav, attrs)
    return compare_pairstats(g, stats, fm.spec.family, grav_stats, seed=seed, m=m)


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float) and math.isnan(value):
        return "nan"
    return repr(float(value))


def emit_report(report: ComparisonReport, out_dir, basename="report"):
    """Write the per-node CSV and summary JSON; returns (csv_path, json_path).

    Output is byte-deterministic for a fixed report.
    """
    import os

    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{basename}.csv")
    json_path = os.path.join(out_dir, f"{basename}_summary.json")
    try:
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            header = ["node", "metric", "observed", "expected", "defined"]
            if report.gravity is not None:
                header.append("gravity")
            writer.writerow(header)
            for metric in report.metrics:
                obs = report.observed[metric]
                exp = report.expected[metric]
                grav = report.gravity[metric] if report.gravity is not None else None
                for i, label in enumerate(report.labels):
                    defined = bool(np.isfinite(obs[i]) and np.isfinite(exp[i]))
                    row = [label, metric, _fmt(obs[i]), _fmt(exp[i]), str(defined)]
                    if grav is not None:
                        row.append(_fmt(grav[i]))
                    writer.writerow(row)
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(_jsonable(report.summary), fh, sort_keys=True, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise IOError(f"cannot write report to {out_dir}: {exc}") from exc
    return csv_path, json_path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if math.isnan(v) else v
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


def read_report(csv_path, json_path):
    """Inverse of emit_report, for round-trip checks and downstream tooling."""
    with open(json_path, encoding="utf-8") as fh:
        summary = json.load(fh)
    observed, expected, gravity = {}, {}, {}
    labels_order = []
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        has_gravity = "gravity" in reader.fieldnames
        for row in reader:
            metric = row["metric"]
            observed.setdefault(metric, []).append(float(row["observed"]))
            expected.setdefault(metric, []).append(float(row["expected"]))
            if has_gravity:
                gravity.setdefault(metric, []).append(float(row["gravity"]))
            if metric == next(iter(observed)):
                labels_order.append(row["node"])
    metrics = tuple(observed)
    return ComparisonReport(
        labels=tuple(labels_order),
        metrics=metrics,
        observed={k: np.array(v) for k, v in observed.items()},
        expected={k: np.array(v) for k, v in expected.items()},
        gravity={k: np.array(v) for k, v in gravity.items()} if gravity else None,
        summary=summary,
    )
