"""Seeded experiments that write CSV tables.

``cmd_kl_experiment``
    Random spanning trees plus one extra edge; node-averaged KL divergence
    between exact tree beliefs and damped loopy BP on the one-loop graph
    over a temperature grid.
``cmd_forest_sweep``
    Exact, forest, tree and first-order partition functions over a graph
    family and a list of inverse temperatures.
``cmd_report``
    Plain-text summary of a graph and model.

Every (size, sample) unit draws from its own generator seeded by
``SeedSequence(seed, spawn_key=(size, sample))``, and rows are sorted
before writing, so output bytes do not depend on the worker count.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .approx import AboveCriticalWarning, error_bound, first_order_partition, reference_tree, tree_partition
from .bp import DirectedEdges, _tree_two_pass, damped_bp_batch, kl_divergence
from .config import ExperimentConfig, ModelConfig, build_model
from .errors import CapExceededError, ConfigError
from .exact import exact_partition
from .forests import forest_partition
from .graph import InteractionGraph, classify_density, girth, max_spanning_tree, read_edge_list
from .model import critical_beta, ising_model

__all__ = [
    "KL_COLUMNS",
    "SWEEP_COLUMNS",
    "KLSample",
    "family_graph",
    "kl_sample",
    "kl_rows",
    "sweep_rows",
    "cmd_kl_experiment",
    "cmd_forest_sweep",
    "cmd_report",
    "format_float",
]

KL_COLUMNS = ("size", "sample", "temperature", "kl", "converged", "iterations", "max_residual")
SWEEP_COLUMNS = (
    "family", "L", "beta", "n_nodes", "z_exact", "z_forest", "z_tree", "z_first_order",
    "gap_forest", "gap_tree", "gap_first_order", "q", "bound", "status",
)


def format_float(x: float) -> str:
    """Shortest round-trip text; non-finite values as ``inf``, ``-inf``, ``nan``."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _write_csv(path, columns, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _rng(seed: int, size: int, sample: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(size, sample)))


# ---------------------------------------------------------------------------
# KL experiment


@dataclass(frozen=True)
class KLSample:
    """One random graph evaluated over the whole temperature grid."""

    size: int
    sample: int
    tree: InteractionGraph
    loop_edge: tuple[int, int]
    kl: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray
    max_residual: np.ndarray


def random_tree_plus_edge(n: int, rng: np.random.Generator) -> tuple[InteractionGraph, tuple[int, int]]:
    """Kruskal minimum spanning tree of the complete graph under uniform
    weights, and one extra edge drawn uniformly from the non-tree pairs."""
    if n < 3:
        raise ValueError("need at least 3 nodes to close a loop with one extra edge")
    iu, ju = np.triu_indices(n, k=1)
    weights = rng.uniform(size=len(iu))
    complete = InteractionGraph(n, tuple(zip(iu.tolist(), ju.tolist())))
    # minimum spanning tree as a maximum one under negated weights
    tc = max_spanning_tree(complete, (-weights).tolist())
    tree = complete.subgraph(tc.tree_edges)
    non_tree = sorted(tc.cotree_edges)
    extra = complete.endpoints(non_tree[int(rng.integers(len(non_tree)))])
    return tree, extra


def kl_sample(cfg: ExperimentConfig, size: int, sample: int) -> KLSample:
    """KL between tree beliefs and loopy BP for one seeded random graph.

    Loopy BP starts from uniform random messages drawn from the sample's
    stream; the same start is used at every temperature.
    """
    rng = _rng(cfg.seed, size, sample)
    tree, (a, b) = random_tree_plus_edge(size, rng)
    loopy = tree.add_edge(a, b)
    temps = cfg.temps.values()
    tree_model = ising_model(tree, cfg.j, cfg.half_factor, 1.0)
    loopy_model = ising_model(loopy, cfg.j, cfg.half_factor, 1.0)
    layout = DirectedEdges.of(loopy_model)
    base = layout.log_psi(loopy_model)
    log_psi = np.stack([base / t for t in temps])
    init = rng.uniform(size=(len(layout.src), layout.width))
    log_beliefs, converged, iterations, residual = damped_bp_batch(
        layout, log_psi, layout.node_mask(loopy_model.state_sizes), init,
        cfg.tol, cfg.max_iters, cfg.damping,
    )
    kl = np.empty(len(temps))
    for k, t in enumerate(temps):
        exact_tree = _tree_two_pass(tree_model.with_beta(1.0 / t))
        kl[k] = kl_divergence(exact_tree.marginals, list(np.exp(log_beliefs[k])))
    return KLSample(size, sample, tree, (a, b), kl, converged, iterations, residual)


def _kl_unit(args) -> KLSample:
    cfg, size, sample = args
    return kl_sample(cfg, size, sample)


def _map_units(fn, units, workers: int):
    if workers == 1 or len(units) <= 1:
        return [fn(u) for u in units]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, units))


def kl_rows(cfg: ExperimentConfig) -> list[list[str]]:
    """Rows of the KL table sorted by (size, sample, temperature index).

    Per-sample rows carry their own convergence flag (0/1), iteration count
    and final residual.  The mean row of each (size, temperature) has
    ``sample = -1``, the sample-average KL, the number of converged
    samples, and the maximum iterations and residual.
    """
    units = [(cfg, size, s) for size in sorted(set(cfg.sizes)) for s in range(cfg.samples)]
    results = _map_units(_kl_unit, units, cfg.workers)
    results.sort(key=lambda r: (r.size, r.sample))
    temps = cfg.temps.values()
    rows = []
    for size in sorted(set(cfg.sizes)):
        group = [r for r in results if r.size == size]
        for k, t in enumerate(temps):
            rows.append([
                str(size), "-1", format_float(t),
                format_float(math.fsum(r.kl[k] for r in group) / len(group)),
                str(sum(int(r.converged[k]) for r in group)),
                str(max(int(r.iterations[k]) for r in group)),
                format_float(max(float(r.max_residual[k]) for r in group)),
            ])
        for r in group:
            for k, t in enumerate(temps):
                rows.append([
                    str(size), str(r.sample), format_float(t), format_float(r.kl[k]),
                    str(int(r.converged[k])), str(int(r.iterations[k])), format_float(r.max_residual[k]),
                ])
    return rows


def cmd_kl_experiment(cfg: ExperimentConfig) -> Path:
    rows = kl_rows(cfg)
    _write_csv(cfg.out_path, KL_COLUMNS, rows)
    return Path(cfg.out_path)


# ---------------------------------------------------------------------------
# Partition-function sweep


def family_graph(family: str, size: int) -> InteractionGraph:
    """``ring``: L-cycle.  ``one_chord``: L-cycle plus a pendant node on node 0.
    ``book``: spine (0, 1) with ``size`` pages, each a node joined to both ends.
    """
    if family == "ring":
        if size < 3:
            raise ValueError("ring needs L >= 3")
        return InteractionGraph.from_pairs(size, [(i, (i + 1) % size) for i in range(size)])
    if family == "one_chord":
        if size < 3:
            raise ValueError("one_chord needs L >= 3")
        pairs = [(i, (i + 1) % size) for i in range(size)] + [(0, size)]
        return InteractionGraph.from_pairs(size + 1, pairs)
    if family == "book":
        if size < 1:
            raise ValueError("book needs at least one page")
        pairs = [(0, 1)] + [(v, p) for p in range(2, size + 2) for v in (0, 1)]
        return InteractionGraph.from_pairs(size + 2, pairs)
    raise ValueError(f"unknown family {family!r}")


def _gap(z: float, exact: float) -> float:
    return abs(z - exact) / exact


def sweep_cell(cfg: ExperimentConfig, size: int, beta: float) -> list[str]:
    g = family_graph(cfg.family, size)
    m = ising_model(g, cfg.j, cfg.half_factor, beta)
    head = [cfg.family, str(size), format_float(beta), str(g.n_nodes)]
    try:
        z_exact = exact_partition(m).z
        z_forest = forest_partition(m)
    except CapExceededError as exc:
        reason = f"skipped:cap:{exc.what.replace(' ', '_')}:{exc.required}>{exc.cap}"
        return head + ["nan"] * 9 + [reason]
    tc = reference_tree(m)
    z_tree = tree_partition(m, tc.tree_edges)
    temp = critical_beta(m)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AboveCriticalWarning)
        z_first = first_order_partition(m, tc)
        report = classify_density(g, cfg.threshold, tc)
        bound = error_bound(m, report, cfg.rho).bound if report.has_cycles else 0.0
    status = "ok" if temp.regime == "below_critical" else "above_critical"
    values = [
        z_exact, z_forest, z_tree, z_first,
        _gap(z_forest, z_exact), _gap(z_tree, z_exact), _gap(z_first, z_exact),
        temp.q, bound,
    ]
    return head + [format_float(v) for v in values] + [status]


def _sweep_unit(args) -> list[str]:
    return sweep_cell(*args)


def sweep_rows(cfg: ExperimentConfig) -> list[list[str]]:
    """One row per (L, beta) cell in sorted order."""
    units = [(cfg, size, beta) for size in sorted(set(cfg.sizes)) for beta in sorted(set(cfg.betas))]
    return _map_units(_sweep_unit, units, cfg.workers)


def cmd_forest_sweep(cfg: ExperimentConfig, family: str | None = None) -> Path:
    """Write the sweep CSV.

    Raises:
        CapExceededError: after the file is written, if any cell was
            skipped because an enumeration cap was hit.
    """
    if family is not None:
        cfg = cfg.replace(family=family)
    rows = sweep_rows(cfg)
    _write_csv(cfg.out_path, SWEEP_COLUMNS, rows)
    skipped = [r for r in rows if r[-1].startswith("skipped:cap:")]
    if skipped:
        what, counts = skipped[0][-1].split(":")[2:]
        required, cap = (int(t) for t in counts.split(">"))
        where = f"{len(skipped)} cell(s) skipped, first L={skipped[0][1]} beta={skipped[0][2]}"
        raise CapExceededError(f"{where}; {what.replace('_', ' ')}", required, cap)
    return Path(cfg.out_path)


# ---------------------------------------------------------------------------
# Report


def cmd_report(graph_path=None, model_cfg: ModelConfig | None = None, threshold: float = 0.5) -> str:
    """Graph and temperature summary as ``key: value`` lines.

    ``graph_path`` falls back to the ``graph`` entry of ``model_cfg``.
    """
    model_cfg = model_cfg or ModelConfig()
    graph_path = graph_path or model_cfg.graph
    if graph_path is None:
        raise ConfigError("no graph given (use --graph or 'graph = <path>' in the model config)")
    g = read_edge_list(graph_path)
    m = build_model(g, model_cfg)
    density = classify_density(g, threshold)
    temp = critical_beta(m)
    length = girth(g)
    lines = [
        ("nodes", str(g.n_nodes)),
        ("edges", str(g.n_edges)),
        ("girth", "inf" if math.isinf(length) else str(int(length))),
        ("dual_degree_max", str(density.k_max_dual_degree)),
        ("density", density.label),
        ("density_ratio", format_float(density.ratio)),
        ("threshold", format_float(threshold)),
        ("sup_h", format_float(temp.sup_h)),
        ("beta", format_float(temp.beta)),
        ("beta_c", format_float(temp.beta_c)),
        ("q", format_float(temp.q)),
        ("regime", temp.regime),
    ]
    return "".join(f"{k}: {v}\n" for k, v in lines)
