"""CSV writers for run results and the run manifest.

Every writer takes an output directory and returns the path it wrote.
Floats are written with ``repr`` so identical runs give identical files.
"""

from __future__ import annotations

import csv
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .addressing import to_binary
from .config import ExperimentConfig, dumps
from .engine import BALANCE_COLUMNS, SERIES, ExperimentResult, GraphResult
from .metrics import (LAYERS, POPULATIONS, clique_stats, even_share_by_hop, even_share_by_neighborhood,
                      hop_reward_fractions, income_fairness, mean_forward_reward_and_path_length,
                      paid_forward_heatmap)
from .topology import neighborhood_sizes
from .workload import ingest_trace, rank_frequency


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def write_rows(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def write_manifest(out, cfg: ExperimentConfig, preset: str | None = None, argv=None) -> Path:
    """Tool version, platform, invocation and the full config."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    lines = [
        f"tool = bandsim {__version__}",
        f"python = {platform.python_version()}",
        f"numpy = {np.__version__}",
        f"preset = {preset or '-'}",
        f"seed = {cfg.seed}",
        f"command = {' '.join(argv if argv is not None else sys.argv)}",
        "",
        dumps(cfg),
    ]
    path = out / "manifest.txt"
    path.write_text("\n".join(lines))
    return path


def fairness_value(g: GraphResult, layer: str, population: str, clamp: bool) -> float:
    if population == "nonOriginators" and g.network.is_originator.all():
        return float("nan")
    return income_fairness(g.ledger, layer, g.network.is_originator, population, clamp)


def fairness_rows(result: ExperimentResult, label: str = "") -> list[list]:
    """(label, graphSeed, layer, population, value) for every graph plus the mean."""
    rows = []
    clamp = result.config.fairness_clamp
    for layer in LAYERS:
        for population in POPULATIONS:
            values = [fairness_value(g, layer, population, clamp) for g in result.graphs]
            rows += [[label, g.seed, layer, population, v] for g, v in zip(result.graphs, values)]
            finite = [v for v in values if not np.isnan(v)]
            rows.append([label, "mean", layer, population, float(np.mean(finite)) if finite else float("nan")])
    return rows


def write_fairness(out, result: ExperimentResult, name: str = "fairness_summary.csv", label: str = "") -> Path:
    return write_rows(Path(out) / name, ["variant", "graphSeed", "layer", "population", "value"],
                      fairness_rows(result, label))


def write_timeseries(out, result: ExperimentResult, name: str = "timeseries.csv", label: str = "") -> Path:
    rows = []
    for g in result.graphs:
        for series in SERIES:
            for t, value in enumerate(g.ledger.series.get(series, [])):
                rows.append([label, g.seed, series, t, value])
    return write_rows(Path(out) / name, ["variant", "graphSeed", "series", "second", "value"], rows)


def write_heatmap(out, result: ExperimentResult, name: str = "heatmap.csv", label: str = "") -> Path:
    rows = []
    for g in result.graphs:
        frac = paid_forward_heatmap(g.ledger)
        for hop in range(1, frac.shape[0]):
            if g.ledger.total_forwards[hop].sum() == 0:
                continue
            for t in range(frac.shape[1]):
                rows.append([label, g.seed, hop, t, frac[hop, t]])
    return write_rows(Path(out) / name, ["variant", "graphSeed", "hop", "second", "fraction"], rows)


def write_hop_rewards(out, result: ExperimentResult, name: str = "hop_rewards.csv", label: str = "") -> Path:
    rows = []
    for g in result.graphs:
        for hop, value in enumerate(hop_reward_fractions(g.ledger), start=1):
            rows.append([label, g.seed, hop, value])
    return write_rows(Path(out) / name, ["variant", "graphSeed", "hop", "fraction"], rows)


def write_even_share(out, result: ExperimentResult, name: str = "even_share.csv", label: str = "",
                     layer: str = "accounting") -> Path:
    rows = []
    for g in result.graphs:
        income = g.ledger.income(layer).astype(np.float64)
        for x, ratio in even_share_by_hop(g.ledger, income):
            rows.append([label, g.seed, "avgHopDecile", x, ratio])
        per_peer = neighborhood_sizes(g.network)[g.network.neighborhood_ids()]
        for size, ratio in even_share_by_neighborhood(income, per_peer):
            rows.append([label, g.seed, "neighborhoodSize", size, ratio])
    return write_rows(Path(out) / name, ["variant", "graphSeed", "grouping", "x", "ratio"], rows)


def clique_row(g: GraphResult) -> tuple[float, float, float]:
    """(net tokens per chunk, gross tokens per chunk, internal hop fraction) for the originators."""
    members = g.network.originators()
    net, internal = clique_stats(g.ledger, members)
    chunks = g.ledger.downloaded[members].sum()
    gross = float(g.ledger.tokens_out[members].sum() / chunks) if chunks else 0.0
    return net, gross, internal


def write_clique(out, results: dict[str, ExperimentResult], name: str = "clique_stats.csv") -> Path:
    rows = []
    for label, result in results.items():
        external = result.config.clique_mode == "external"
        for g in result.graphs:
            net, gross, internal = clique_row(g)
            rows.append([label, g.seed, len(g.network.originators()), net, gross, "" if external else internal])
    return write_rows(Path(out) / name, ["variant", "graphSeed", "originators", "tokensPerChunk",
                                         "grossTokensPerChunk", "internalHopFraction"], rows)


def cache_hit_ratios(g: GraphResult) -> tuple[float, float]:
    """(all peers, originators) cache hit ratio; NaN without caches."""
    stats = g.ledger.cache_stats
    if stats is None:
        return float("nan"), float("nan")
    orig = g.network.is_originator

    def ratio(rows):
        lookups = rows[:, 0].sum() + rows[:, 1].sum()
        return float(rows[:, 0].sum() / lookups) if lookups else 0.0

    return ratio(stats), ratio(stats[orig])


def write_cache_stats(out, results: dict[str, ExperimentResult], name: str = "cache_stats.csv") -> Path:
    rows = []
    for label, result in results.items():
        for g in result.graphs:
            all_ratio, orig_ratio = cache_hit_ratios(g)
            rows.append([label, g.seed, all_ratio, orig_ratio,
                         fairness_value(g, "settlement", "nonOriginators", result.config.fairness_clamp)])
    return write_rows(Path(out) / name, ["variant", "graphSeed", "cacheHitRatio", "originatorCacheHitRatio",
                                         "nonOriginatorFairness"], rows)


def write_path_stats(out, results: dict[str, ExperimentResult], name: str = "path_stats.csv") -> Path:
    rows = []
    for label, result in results.items():
        for g in result.graphs:
            reward, length = mean_forward_reward_and_path_length(g.ledger)
            rows.append([label, g.seed, reward, length])
    return write_rows(Path(out) / name, ["variant", "graphSeed", "meanForwardReward", "meanHops"], rows)


def write_route_log(out, result: ExperimentResult, name: str = "route_log.csv") -> Path | None:
    rows = []
    for g in result.graphs:
        if g.routes is None:
            continue
        bits = g.network.bits
        for r in g.routes:
            rows.append([g.seed, r.epoch, to_binary(r.chunk, bits), ";".join(map(str, r.path)),
                         ";".join(map(str, r.credits)), ";".join(map(str, r.settled)), r.terminal.value])
    if not rows:
        return None
    return write_rows(Path(out) / name, ["graphSeed", "epoch", "chunk", "pathIds", "perHopCredit", "perHopSettled",
                                         "terminal"], rows)


def write_settlement(out, result: ExperimentResult, name: str = "settlement.csv") -> Path:
    """Per-peer token flows; ``net`` is the settlement-layer income."""
    rows = []
    for g in result.graphs:
        led = g.ledger
        net = led.income("settlement")
        for p in range(g.network.n):
            rows.append([g.seed, p, led.tokens_in[p], led.tokens_out[p], led.tokens_out_originator[p], net[p]])
    return write_rows(Path(out) / name, ["graphSeed", "peerId", "tokensIn", "tokensOut", "tokensOutAsOriginator",
                                         "net"], rows)


def write_cache_counters(out, result: ExperimentResult, name: str = "cache_counters.csv") -> Path | None:
    rows = []
    for g in result.graphs:
        if g.ledger.cache_stats is None:
            continue
        for p, (hits, misses, insertions, evictions) in enumerate(g.ledger.cache_stats):
            rows.append([g.seed, p, hits, misses, insertions, evictions])
    if not rows:
        return None
    return write_rows(Path(out) / name, ["graphSeed", "peerId", "hits", "misses", "insertions", "evictions"], rows)


def write_balances(out, result: ExperimentResult, name: str = "balances.csv") -> Path | None:
    rows = [[g.seed, *row] for g in result.graphs if g.balances is not None for row in g.balances]
    if not rows:
        return None
    return write_rows(Path(out) / name, ["graphSeed", *BALANCE_COLUMNS], rows)


def write_networks(out, result: ExperimentResult) -> list[Path]:
    """One ``network_<graphSeed>.csv`` per graph, as the topology stood at the end of the run."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for g in result.graphs:
        path = out / f"network_{g.seed}.csv"
        g.network.to_csv(path)
        paths.append(path)
    return paths


def write_rank_frequency(out, cfg: ExperimentConfig, name: str = "rank_frequency.csv") -> Path:
    rows = ingest_trace(cfg.trace_path, cfg.trace_cid_column, cfg.trace_bytes_column)
    return write_rows(Path(out) / name, ["rank", "cid", "count"], rank_frequency(r.cid for r in rows))


def write_run(out, result: ExperimentResult) -> list[Path]:
    """Standard report set of a single (non-preset) experiment."""
    paths = [write_fairness(out, result), write_timeseries(out, result), write_heatmap(out, result),
             write_hop_rewards(out, result), write_even_share(out, result),
             write_path_stats(out, {"run": result}), write_settlement(out, result)]
    cfg = result.config
    if cfg.caching:
        paths += [write_cache_stats(out, {"run": result}), write_cache_counters(out, result)]
    if cfg.state_dump:
        paths += [write_balances(out, result), *write_networks(out, result)]
    if cfg.workload == "trace":
        paths.append(write_rank_frequency(out, cfg))
    if cfg.clique_mode != "none":
        paths.append(write_clique(out, {"run": result}))
    log_path = write_route_log(out, result)
    if log_path is not None:
        paths.append(log_path)
    return paths
