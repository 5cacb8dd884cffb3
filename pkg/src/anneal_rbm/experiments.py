"""Experiment orchestration: replication vs penalty-encoding vs baseline.

Two studies:

* ``qac_comparison`` -- on a structure admitting both embeddings (k=4), run
  replication (one call, min subsample), penalty encoding (alpha < 0,
  majority decode) and the uncorrected baseline (alpha = 0, majority decode),
  with matched read counts, over a grid of bias sets.
* ``scaling`` -- on replica-only partitions for k in {2,4,8}, compare
  replication (one call on the k-copy problem) against k separate calls on a
  single region, over a clause-density grid.  Both consume identical total
  reads per instance.

Every random draw is keyed off the config seed, so a report is a pure
function of its config.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field

from . import rng
from .decode import build_qac_problem, decode_majority, decode_rbm, decode_sqa_repeat
from .embedding import combine_qac_rbm, partition_replicas
from .errors import InvalidParameterError
from .ising import replicate
from .planted import GeneratorParams, build_loop_cover, generate_instance
from .samplers import (AnnealParams, NoiseModel, noise_from_dict,
                       noise_to_dict, sample_sa)
from .topology import build_pegasus

#: Hardware-scale (m=16) embedding sizes reported for reference, keyed by
#: study structure: (linear terms, quadratic terms).  Desk-scale runs log
#: their own sizes next to these for comparison.
REFERENCE_SIZES = {
    "qac_k4": (95, 125),
    "k2": (2652, 15349),
    "k4": (1219, 6914),
    "k8": (526, 2826),
}

_STUDIES = ("qac_comparison", "scaling")


def max_threads() -> int:
    """Parallelism cap from the environment (>=1, default sequential)."""
    raw = os.environ.get("ANNEAL_RBM_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map_instances(worker, count: int) -> list:
    """Run per-instance work, optionally threaded, reduced in index order.

    Every instance derives its own random streams, so the result is the same
    list whichever schedule the pool picks.
    """
    workers = min(max_threads(), count)
    if workers <= 1:
        return [worker(i) for i in range(count)]
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, range(count)))


@dataclass(frozen=True)
class ExperimentConfig:
    study: str = "qac_comparison"
    graph_m: int = 4
    k: int = 4
    k_values: tuple[int, ...] = (2, 4, 8)
    bias_sets: tuple[tuple[float, float], ...] = ((9.0, 2.0), (10.0, 2.0), (11.0, 2.0))
    scaling_bias: tuple[float, float] = (10.0, 2.0)
    p_large: float = 0.08
    beta: float = 1.0
    beta_grid: tuple[float, ...] = (0.7, 0.8, 0.9, 1.0)
    instances_per_cell: int = 10
    num_reads: int = 100
    sweeps: int = 1000
    alpha: float = -1.0
    noise: NoiseModel | None = None
    seed: int = 0

    def __post_init__(self):
        if self.study not in _STUDIES:
            raise InvalidParameterError(f"study must be one of {_STUDIES}, got {self.study!r}")
        if self.instances_per_cell < 1:
            raise InvalidParameterError("instances_per_cell must be >= 1")
        if not self.bias_sets or not self.beta_grid or not self.k_values:
            raise InvalidParameterError("parameter grids must be nonempty")


@dataclass
class MethodCell:
    """Aggregated results of one method on one parameter cell."""

    cell: dict
    method: str
    mean_best: float
    mean_planted: float
    mean_normalized: float
    gsp: float
    records: list[dict] = field(default_factory=list)


@dataclass
class ExperimentReport:
    study: str
    config: dict
    cells: list[MethodCell]
    instance_sizes: dict


def gsp(results: list[tuple[float, float]]) -> float:
    """Fraction of instances whose best energy matches the planted energy.

    Matching is exact equality: generated coefficients are integers, so the
    sums compare exactly in double precision.
    """
    if not results:
        raise InvalidParameterError("ground-state probability of an empty result list")
    hits = sum(1 for best, planted in results if best == planted)
    return hits / len(results)


def _derived_seed(base: int, *path: int) -> int:
    return int(rng.stream(base, rng.STREAM_EXPERIMENT, *path).integers(1 << 62))


def _cell_results(cell: dict, per_method: dict[str, list[dict]]) -> list[MethodCell]:
    out = []
    for method, records in per_method.items():
        pairs = [(r["best"], r["planted"]) for r in records]
        out.append(MethodCell(
            cell=dict(cell), method=method,
            mean_best=sum(b for b, _ in pairs) / len(pairs),
            mean_planted=sum(p for _, p in pairs) / len(pairs),
            mean_normalized=sum(b / p for b, p in pairs) / len(pairs),
            gsp=gsp(pairs), records=records))
    return out


def run_qac_comparison(cfg: ExperimentConfig) -> ExperimentReport:
    """Replication vs penalty encoding vs uncorrected baseline at fixed k.

    All three methods solve the same planted instances with the same number
    of reads; the baseline is the penalty encoding with alpha = 0 and a
    problem-qubits-only majority vote.
    """
    g = build_pegasus(cfg.graph_m)
    comb = combine_qac_rbm(g, cfg.k)
    part = comb.rbm_partition
    cover = build_loop_cover(part.n_logical, part.logical_edges)
    enc = comb.encodings[0]

    cells: list[MethodCell] = []
    quad_counts: list[int] = []
    for ci, (large, small) in enumerate(cfg.bias_sets):

        def one_instance(ii: int) -> tuple[int, dict[str, float]]:
            gen = GeneratorParams(bias_large=large, bias_small=small,
                                  p_large=cfg.p_large, beta=cfg.beta,
                                  seed=_derived_seed(cfg.seed, 1, ci, ii))
            inst = generate_instance(cover, gen)

            rp = replicate(inst.problem, part)
            ss = sample_sa(rp.problem,
                           AnnealParams(cfg.num_reads, cfg.sweeps,
                                        seed=_derived_seed(cfg.seed, 2, ci, ii, 0)),
                           cfg.noise, rp.placement)
            rbm = decode_rbm(ss, part, inst.problem)

            qac_p = build_qac_problem(inst.problem, enc, cfg.alpha)
            ss = sample_sa(qac_p.problem,
                           AnnealParams(cfg.num_reads, cfg.sweeps,
                                        seed=_derived_seed(cfg.seed, 2, ci, ii, 1)),
                           cfg.noise, qac_p.placement)
            _, qac = decode_majority(ss, enc, inst.problem)

            sqa_p = build_qac_problem(inst.problem, enc, 0.0)
            ss = sample_sa(sqa_p.problem,
                           AnnealParams(cfg.num_reads, cfg.sweeps,
                                        seed=_derived_seed(cfg.seed, 2, ci, ii, 2)),
                           cfg.noise, sqa_p.placement)
            _, sqa = decode_majority(ss, enc, inst.problem)

            return len(inst.problem.j), {
                "rbm": rbm.energy, "qac": qac.energy, "sqa": sqa.energy,
                "planted": inst.planted_energy}

        per_method: dict[str, list[dict]] = {"rbm": [], "qac": [], "sqa": []}
        for ii, (n_quad, result) in enumerate(
                _map_instances(one_instance, cfg.instances_per_cell)):
            quad_counts.append(n_quad)
            for method in per_method:
                per_method[method].append({
                    "instance": ii, "best": result[method],
                    "planted": result["planted"]})
        cells += _cell_results({"k": cfg.k, "bias": [large, small], "beta": cfg.beta},
                               per_method)

    sizes = {
        "qac_k4": {
            "n_linear": part.n_logical,
            "n_quadratic": sum(quad_counts) / len(quad_counts),
            "reference": list(REFERENCE_SIZES["qac_k4"]),
        }
    }
    return ExperimentReport(study="qac_comparison", config=config_to_dict(cfg),
                            cells=cells, instance_sizes=sizes)


def run_scaling(cfg: ExperimentConfig) -> ExperimentReport:
    """Replication vs k-repeated single-region baseline over a beta grid.

    Per instance, replication samples the k-copy problem once with num_reads
    reads (k subsamples each); the baseline runs k separate calls of
    num_reads reads on region 0 — identical total read budgets, but the
    baseline occupies one hardware region only (and k times the wall time).
    """
    g = build_pegasus(cfg.graph_m)
    large, small = cfg.scaling_bias
    cells: list[MethodCell] = []
    sizes: dict[str, dict] = {}

    for ki, k in enumerate(cfg.k_values):
        part = partition_replicas(g, k)
        cover = build_loop_cover(part.n_logical, part.logical_edges)
        placement0 = dict(part.iso_maps[0])
        quad_counts: list[int] = []
        for bi, beta in enumerate(cfg.beta_grid):

            def one_instance(ii: int) -> tuple[int, dict[str, float]]:
                gen = GeneratorParams(bias_large=large, bias_small=small,
                                      p_large=cfg.p_large, beta=beta,
                                      seed=_derived_seed(cfg.seed, 3, ki, bi, ii))
                inst = generate_instance(cover, gen)

                rp = replicate(inst.problem, part)
                ss = sample_sa(rp.problem,
                               AnnealParams(cfg.num_reads, cfg.sweeps,
                                            seed=_derived_seed(cfg.seed, 4, ki, bi, ii, 0)),
                               cfg.noise, rp.placement)
                rbm = decode_rbm(ss, part, inst.problem)

                repeats = [
                    sample_sa(inst.problem,
                              AnnealParams(cfg.num_reads, cfg.sweeps,
                                           seed=_derived_seed(cfg.seed, 4, ki, bi, ii, 1 + rep)),
                              cfg.noise, placement0)
                    for rep in range(k)
                ]
                sqa = decode_sqa_repeat(repeats, inst.problem)
                return len(inst.problem.j), {
                    "rbm": rbm.energy, "sqa": sqa.energy,
                    "planted": inst.planted_energy}

            per_method: dict[str, list[dict]] = {"rbm": [], "sqa": []}
            for ii, (n_quad, result) in enumerate(
                    _map_instances(one_instance, cfg.instances_per_cell)):
                quad_counts.append(n_quad)
                for method in per_method:
                    per_method[method].append({
                        "instance": ii, "best": result[method],
                        "planted": result["planted"]})
            cells += _cell_results({"k": k, "bias": [large, small], "beta": beta},
                                   per_method)
        sizes[f"k{k}"] = {
            "n_linear": part.n_logical,
            "n_quadratic": sum(quad_counts) / len(quad_counts),
            "reference": list(REFERENCE_SIZES.get(f"k{k}", ())),
        }

    return ExperimentReport(study="scaling", config=config_to_dict(cfg),
                            cells=cells, instance_sizes=sizes)


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    if cfg.study == "qac_comparison":
        return run_qac_comparison(cfg)
    return run_scaling(cfg)


# ---------------------------------------------------------------------------
# Report emission

def report_to_dict(report: ExperimentReport) -> dict:
    return {
        "study": report.study,
        "config": report.config,
        "instance_sizes": report.instance_sizes,
        "cells": [{
            "cell": c.cell, "method": c.method,
            "mean_best": c.mean_best, "mean_planted": c.mean_planted,
            "mean_normalized": c.mean_normalized, "gsp": c.gsp,
            "records": c.records,
        } for c in report.cells],
    }


def report_from_dict(data: dict) -> ExperimentReport:
    cells = [MethodCell(cell=c["cell"], method=c["method"],
                        mean_best=c["mean_best"], mean_planted=c["mean_planted"],
                        mean_normalized=c["mean_normalized"], gsp=c["gsp"],
                        records=list(c.get("records", ())))
             for c in data["cells"]]
    return ExperimentReport(study=data["study"], config=dict(data.get("config", {})),
                            cells=cells, instance_sizes=dict(data.get("instance_sizes", {})))


def _cell_label(cell: dict) -> str:
    parts = [f"k={cell['k']}"]
    if "bias" in cell:
        large, small = cell["bias"]
        parts.append(f"bias=({large:g},{small:g})")
    if "beta" in cell:
        parts.append(f"beta={cell['beta']:g}")
    return " ".join(parts)


def report_to_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["study", "k", "bias_large", "bias_small", "beta", "method",
                     "instances", "mean_best", "mean_planted",
                     "mean_normalized", "gsp"])
    for c in report.cells:
        bias = c.cell.get("bias", ["", ""])
        writer.writerow([report.study, c.cell.get("k", ""), bias[0], bias[1],
                         c.cell.get("beta", ""), c.method, len(c.records),
                         repr(c.mean_best), repr(c.mean_planted),
                         repr(c.mean_normalized), repr(c.gsp)])
    return buf.getvalue()


def _svg_bar_chart(title: str, groups: list[str], series: list[str],
                   values: dict[tuple[str, str], float], y_label: str) -> str:
    """Deterministic grouped bar chart, one group per cell, one bar per method."""
    width, height = 120 + 90 * max(1, len(groups)), 360
    plot_left, plot_right, plot_top, plot_bottom = 70, width - 20, 50, height - 80
    vmax = max([abs(v) for v in values.values()] + [1e-12])
    colors = ["#4878cf", "#e24a33", "#6aa84f", "#b45fbf", "#d9a326"]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<text x="{width / 2:g}" y="24" text-anchor="middle" font-size="15">{title}</text>',
        f'<text x="16" y="{(plot_top + plot_bottom) / 2:g}" font-size="11" '
        f'transform="rotate(-90 16 {(plot_top + plot_bottom) / 2:g})" '
        f'text-anchor="middle">{y_label}</text>',
        f'<line x1="{plot_left}" y1="{plot_bottom}" x2="{plot_right}" '
        f'y2="{plot_bottom}" stroke="#333"/>',
    ]
    group_w = (plot_right - plot_left) / max(1, len(groups))
    bar_w = group_w / (len(series) + 1)
    for gi, group in enumerate(groups):
        x0 = plot_left + gi * group_w
        for si, method in enumerate(series):
            v = values.get((group, method))
            if v is None:
                continue
            frac = abs(v) / vmax
            bar_h = (plot_bottom - plot_top) * frac
            x = x0 + (si + 0.5) * bar_w
            y = plot_bottom - bar_h
            out.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{bar_w:.2f}" '
                       f'height="{bar_h:.2f}" fill="{colors[si % len(colors)]}"/>')
            out.append(f'<text x="{x + bar_w / 2:.2f}" y="{y - 4:.2f}" font-size="9" '
                       f'text-anchor="middle">{v:.4g}</text>')
        out.append(f'<text x="{x0 + group_w / 2:.2f}" y="{plot_bottom + 16}" '
                   f'font-size="10" text-anchor="middle">{group}</text>')
    for si, method in enumerate(series):
        lx = plot_left + si * 110
        out.append(f'<rect x="{lx}" y="{height - 36}" width="12" height="12" '
                   f'fill="{colors[si % len(colors)]}"/>')
        out.append(f'<text x="{lx + 16}" y="{height - 26}" font-size="11">{method}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_report(report: ExperimentReport) -> dict[str, str]:
    """All report sinks as named payload strings (filename -> content)."""
    groups: list[str] = []
    for c in report.cells:
        label = _cell_label(c.cell)
        if label not in groups:
            groups.append(label)
    series: list[str] = []
    for c in report.cells:
        if c.method not in series:
            series.append(c.method)
    energy_vals = {(_cell_label(c.cell), c.method): c.mean_normalized for c in report.cells}
    gsp_vals = {(_cell_label(c.cell), c.method): c.gsp for c in report.cells}
    return {
        "report.json": json.dumps(report_to_dict(report), sort_keys=True, indent=1) + "\n",
        "report.csv": report_to_csv(report),
        "energies.svg": _svg_bar_chart(f"{report.study}: normalized best energy",
                                       groups, series, energy_vals,
                                       "mean best / planted"),
        "gsp.svg": _svg_bar_chart(f"{report.study}: ground state probability",
                                  groups, series, gsp_vals, "GSP"),
    }


def emit_report(report: ExperimentReport, out_dir: str,
                formats: tuple[str, ...] = ("json", "csv", "svg")) -> list[str]:
    """Write the selected sinks into ``out_dir``; returns the paths written."""
    payloads = render_report(report)
    chosen = {
        "json": ["report.json"],
        "csv": ["report.csv"],
        "svg": ["energies.svg", "gsp.svg"],
    }
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for fmt in formats:
        if fmt not in chosen:
            raise InvalidParameterError(f"unknown report format {fmt!r}")
        for name in chosen[fmt]:
            path = os.path.join(out_dir, name)
            with open(path, "w") as f:
                f.write(payloads[name])
            written.append(path)
    return written


# ---------------------------------------------------------------------------
# Config serialization

def config_to_dict(cfg: ExperimentConfig) -> dict:
    noise = noise_to_dict(cfg.noise) if cfg.noise is not None else None
    return {
        "study": cfg.study, "graph_m": cfg.graph_m, "k": cfg.k,
        "k_values": list(cfg.k_values),
        "bias_sets": [list(b) for b in cfg.bias_sets],
        "scaling_bias": list(cfg.scaling_bias),
        "p_large": cfg.p_large, "beta": cfg.beta,
        "beta_grid": list(cfg.beta_grid),
        "instances_per_cell": cfg.instances_per_cell,
        "num_reads": cfg.num_reads, "sweeps": cfg.sweeps,
        "alpha": cfg.alpha, "noise": noise, "seed": cfg.seed,
    }


def config_from_dict(data: dict) -> ExperimentConfig:
    from .errors import FormatError
    try:
        noise = None
        if data.get("noise") is not None:
            noise = noise_from_dict(data["noise"])
        kwargs = dict(
            study=data.get("study", "qac_comparison"),
            graph_m=int(data.get("graph_m", 4)),
            k=int(data.get("k", 4)),
            k_values=tuple(int(k) for k in data.get("k_values", (2, 4, 8))),
            bias_sets=tuple(tuple(float(x) for x in b)
                            for b in data.get("bias_sets", ((9, 2), (10, 2), (11, 2)))),
            scaling_bias=tuple(float(x) for x in data.get("scaling_bias", (10, 2))),
            p_large=float(data.get("p_large", 0.08)),
            beta=float(data.get("beta", 1.0)),
            beta_grid=tuple(float(b) for b in data.get("beta_grid", (0.7, 0.8, 0.9, 1.0))),
            instances_per_cell=int(data.get("instances_per_cell", 10)),
            num_reads=int(data.get("num_reads", 100)),
            sweeps=int(data.get("sweeps", 1000)),
            alpha=float(data.get("alpha", -1.0)),
            noise=noise,
            seed=int(data.get("seed", 0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed experiment config: {exc}") from exc
    return ExperimentConfig(**kwargs)
