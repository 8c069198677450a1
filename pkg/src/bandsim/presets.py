"""Named experiment sweeps, one per reproduced figure or table.

A preset turns a base configuration into a dict of labelled variant
configurations and knows how to write their results.  Workload size is
kept comparable across originator counts: the total request rate of the
base configuration is split evenly among however many originators a
variant has.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .accounting import adapted_refresh_rate, adapted_threshold
from .config import ExperimentConfig
from .engine import ExperimentResult, run_experiment
from .metrics import (effective_download_rate, hop_reward_fractions, mean_forward_reward_and_path_length,
                      success_ratio)
from .reports import (fairness_value, cache_hit_ratios, clique_row, write_even_share, write_heatmap, write_manifest,
                      write_rows)
from .topology import NetworkConfig

log = logging.getLogger(__name__)

# long runs cover this many base durations (100 s, i.e. 10M chunks, at defaults)
LONG_RUN_FACTOR = 10


def total_rate(base: ExperimentConfig) -> int:
    return base.rate_per_originator * base.network().originator_count


def with_originators(base: ExperimentConfig, fraction: float, **changes) -> ExperimentConfig:
    """``base`` with ``fraction`` originators sharing the base total request rate."""
    count = NetworkConfig(size=base.network_size, originator_fraction=fraction).originator_count
    rate = max(1, round(total_rate(base) / count))
    return base.replace(originator_fraction=fraction, rate_per_originator=rate, **changes)


def long_run(cfg: ExperimentConfig) -> ExperimentConfig:
    return cfg.replace(duration_seconds=cfg.duration_seconds * LONG_RUN_FACTOR)


ACCOUNTING_ONLY = dict(debt_limits=False, free_service="off")
FREE_SERVICE_VARIANTS = {
    "accountingOnly": ACCOUNTING_ONLY,
    "reciprocity": dict(free_service="off"),
    "freeService": dict(free_service="constant"),
    "pairwiseFreeService": dict(free_service="pairwise"),
}


def free_service_layer(label: str) -> str:
    """Layer whose fairness a free-service variant is judged on."""
    return "accounting" if label.startswith("accountingOnly") else "settlement"


# ---------------------------------------------------------------------------
# variant builders


def fig3_variants(base):
    out = {}
    for fraction in (0.005, 0.01, 0.05, 0.1, 0.2, 0.5, 1.0):
        for omega in (16, 30):
            for assignment in ("random", "two-choices"):
                out[f"{fraction}|{omega}|{assignment}"] = with_originators(base, fraction, omega=omega,
                                                                           address_assignment=assignment)
    out["0.005|constant|random"] = base.replace(credit_model="constant", **ACCOUNTING_ONLY)
    return out


def fig4_variants(base):
    return {str(omega): base.replace(omega=omega) for omega in range(max(11, base.storage_depth), 31)}


def fig5_variants(base):
    return {"reciprocity": base.replace(reciprocity=True), "noReciprocity": base.replace(reciprocity=False)}


def fig6_variants(base):
    return {f"{label}|{omega}": base.replace(omega=omega, **changes)
            for omega in (16, 30) for label, changes in FREE_SERVICE_VARIANTS.items()}


def appendix_e_variants(base):
    twenty = long_run(with_originators(base, 0.2))
    return {f"{label}|{omega}": twenty.replace(omega=omega, **changes)
            for omega in (16, 30) for label, changes in FREE_SERVICE_VARIANTS.items()}


def fig7_variants(base):
    cfg = long_run(base.replace(free_service="pairwise", reciprocity=True))
    return {
        "noShuffling": cfg.replace(shuffle_policy="none"),
        "originatorShuffling": cfg.replace(shuffle_policy="originators"),
        "allShuffling": cfg.replace(shuffle_policy="all"),
        "originatorK256": cfg.replace(shuffle_policy="none", originator_bucket_size=256),
    }


def table1_variants(base):
    out = {}
    for count in (5, 100):
        cfg = with_originators(base, count / base.network_size)
        out[f"{count}|randomWithReciprocity"] = cfg
        out[f"{count}|cliqueNoReciprocity"] = cfg.replace(clique_mode="internal", reciprocity=False)
        out[f"{count}|cliqueWithReciprocity"] = cfg.replace(clique_mode="internal")
        out[f"{count}|externalClique"] = cfg.replace(clique_mode="external")
    return out


def table3_variants(base):
    return {str(k): base.replace(bucket_size=k, **ACCOUNTING_ONLY) for k in (4, 8, 16, 20)}


TABLE5_ROWS = (
    # (address assignment, payment model, greedy, pairwise)
    ("random", "A_C", True, False),
    ("random", "A_F", True, False),
    ("random", "A_C", False, False),
    ("random", "A_F", False, False),
    ("random", "A_C", True, True),
    ("random", "A_F", True, True),
    ("random", "A_F", False, True),
    ("two-choices", "A_C", True, False),
)


def table5_variants(base):
    cfg = long_run(base)
    out = {}
    for assignment, payment, greedy, pairwise in TABLE5_ROWS:
        label = f"{assignment}|{payment}|{'greedy' if greedy else 'strict'}|{'pairwise' if pairwise else 'constant'}"
        out[label] = cfg.replace(address_assignment=assignment, payment_model=payment,
                                 next_hop_rule="greedyFree" if greedy else "strictKademlia",
                                 free_service="pairwise" if pairwise else "constant")
    return out


APPENDIX_I_RATES = (250, 500, 1000, 2000, 4000)


def appendix_i_variants(base):
    return {f"{model}|{rate}": base.replace(payment_model=model, rate_per_originator=rate)
            for model in ("NG_", "NW_", "OGF", "OWF", "A_F", "A_C") for rate in APPENDIX_I_RATES}


def appendix_f_variants(base):
    cfg = base if base.workload != "uniform" else base.replace(workload="zipf")
    out = {}
    for fs in ("constant", "pairwise"):
        many = with_originators(cfg, 0.2, free_service=fs)
        out[f"0.2|{fs}|none"] = many
        for size in (1000, 2000, 5000):
            out[f"0.2|{fs}|lru{size}"] = many.replace(cache_policy="lru", cache_size=size)
        few = cfg.replace(free_service=fs)
        out[f"0.005|{fs}|none"] = few
        out[f"0.005|{fs}|lru10000*"] = few.replace(cache_policy="lru", cache_size=10_000)
        for size in (10_000, 20_000, 100_000):
            out[f"0.005|{fs}|lfu{size}"] = few.replace(cache_policy="lru", cache_size=10_000,
                                                       originator_cache_policy="lfu", originator_cache_size=size)
    return out


# ---------------------------------------------------------------------------
# writers


def _split(label: str) -> list[str]:
    return label.split("|")


def _write_fig3(out, results, base):
    rows, paths = [], []
    for label, res in results.items():
        fraction, omega, assignment = _split(label)
        for g in res.graphs:
            rows.append([fraction, omega, assignment, g.seed, fairness_value(g, "accounting", "all", res.config.fairness_clamp)])
    paths.append(write_rows(out / "fig3a.csv", ["originatorFraction", "omega", "addressAssignment", "graphSeed",
                                                 "accountingFairness"], rows))
    for label in ("0.005|16|random", "0.005|30|random", "0.005|constant|random"):
        if label in results:
            paths.append(write_even_share(out, results[label], f"fig3b_{label.split('|')[1]}.csv", label))
    for label in ("1.0|16|random", "1.0|16|two-choices"):
        if label in results:
            paths.append(write_even_share(out, results[label], f"fig3c_{label.split('|')[2]}.csv", label))
    return paths


def _write_fig4(out, results, base):
    rows = []
    for label, res in results.items():
        for g in res.graphs:
            for hop, frac in enumerate(hop_reward_fractions(g.ledger), start=1):
                rows.append([label, g.seed, hop, frac])
    return [write_rows(out / "fig4.csv", ["omega", "graphSeed", "hop", "rewardFraction"], rows)]


def _write_fig5(out, results, base):
    return [write_heatmap(out, res, f"fig5_{label}.csv", label) for label, res in results.items()]


def _fairness_table(results, population):
    rows = []
    for label, res in results.items():
        variant, omega = _split(label)
        layer = free_service_layer(label)
        for g in res.graphs:
            rows.append([omega, variant, layer, population, g.seed, fairness_value(g, layer, population, res.config.fairness_clamp)])
    return rows


def _write_fig6(out, results, base):
    return [write_rows(out / "fig6.csv", ["omega", "variant", "layer", "population", "graphSeed", "fairness"],
                       _fairness_table(results, "all"))]


def _write_appendix_e(out, results, base):
    return [write_rows(out / "appendixE.csv", ["omega", "variant", "layer", "population", "graphSeed", "fairness"],
                       _fairness_table(results, "nonOriginators"))]


def _write_fig7(out, results, base):
    rows = []
    for label, res in results.items():
        for g in res.graphs:
            for t, value in enumerate(g.ledger.series["settlement_all"]):
                rows.append([label, g.seed, t, value])
    return [write_rows(out / "fig7.csv", ["variant", "graphSeed", "second", "fairness"], rows)]


def _write_table1(out, results, base):
    rows = []
    for label, res in results.items():
        count, variant = _split(label)
        external = res.config.clique_mode == "external"
        for g in res.graphs:
            net, gross, internal = clique_row(g)
            rows.append([count, variant, g.seed, net, gross, "" if external else internal])
    return [write_rows(out / "table1.csv", ["originators", "variant", "graphSeed", "tokensPerChunk",
                                            "grossTokensPerChunk", "internalHopFraction"], rows)]


def table2_rows(omega: int, buckets: int = 10) -> list[list[int]]:
    return [[b, adapted_threshold(b, omega), adapted_refresh_rate(b, omega)] for b in range(buckets)]


def _write_table2(out, results, base):
    return [write_rows(out / "table2.csv", ["bucket", "threshold", "refreshRate"],
                       table2_rows(base.omega, base.address_bits))]


def _write_table3(out, results, base):
    rows = []
    for label, res in results.items():
        for g in res.graphs:
            reward, hops = mean_forward_reward_and_path_length(g.ledger)
            rows.append([label, g.seed, reward, hops])
    return [write_rows(out / "table3.csv", ["k", "graphSeed", "meanForwardReward", "meanHops"], rows)]


def negative_income_at(g, second: int) -> tuple[float, int]:
    """(fraction, sum) of negative non-originator income after ``second`` seconds."""
    frac = g.ledger.series["negative_income_fraction"]
    total = g.ledger.series["negative_income_sum"]
    i = min(second, len(frac)) - 1
    return frac[i], total[i]


def _write_table5(out, results, base):
    rows = []
    for label, res in results.items():
        assignment, payment, greedy, free = _split(label)
        for second in (base.duration_seconds, res.config.duration_seconds):
            for g in res.graphs:
                fraction, total = negative_income_at(g, second)
                rows.append([assignment, payment, greedy, free, g.seed, second, fraction, total])
    return [write_rows(out / "table5.csv", ["addressAssignment", "paymentModel", "routing", "freeService",
                                            "graphSeed", "second", "negativeFraction", "negativeSum"], rows)]


def _write_appendix_i(out, results, base):
    rows = []
    for label, res in results.items():
        model, rate = _split(label)
        for g in res.graphs:
            origs = g.network.originators()
            rows.append([model, rate, g.seed, effective_download_rate(g.ledger, origs, res.config.duration_seconds),
                         success_ratio(g.ledger, origs)])
    return [write_rows(out / "appendixI.csv", ["paymentModel", "ratePerOriginator", "graphSeed",
                                               "effectiveRateKBps", "successRatio"], rows)]


def _write_appendix_f(out, results, base):
    rows = []
    for label, res in results.items():
        fraction, fs, cache = _split(label)
        for g in res.graphs:
            hit_all, hit_orig = cache_hit_ratios(g)
            rows.append([fraction, fs, cache, g.seed, fairness_value(g, "settlement", "nonOriginators", res.config.fairness_clamp), hit_all, hit_orig])
    return [write_rows(out / "appendixF.csv", ["originatorFraction", "freeService", "cache", "graphSeed",
                                               "nonOriginatorFairness", "cacheHitRatio", "originatorCacheHitRatio"],
                       rows)]


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Preset:
    name: str
    summary: str
    variants: Callable[[ExperimentConfig], dict]
    write: Callable[[Path, dict, ExperimentConfig], list]


PRESETS = {p.name: p for p in (
    Preset("fig3", "accounting fairness vs originator share, omega and address assignment", fig3_variants,
           _write_fig3),
    Preset("fig4", "per-hop reward fractions for omega 11..30", fig4_variants, _write_fig4),
    Preset("fig5", "fraction of paid forwards per hop and second, with and without reciprocity", fig5_variants,
           _write_fig5),
    Preset("fig6", "reciprocity and free service variants, 0.5% originators", fig6_variants, _write_fig6),
    Preset("fig7", "fairness over time under neighbour shuffling", fig7_variants, _write_fig7),
    Preset("table1", "originator cliques: tokens per chunk and internal hops", table1_variants, _write_table1),
    Preset("table2", "adapted threshold and refresh rate per bucket", lambda base: {}, _write_table2),
    Preset("table3", "mean forward reward and path length per bucket size", table3_variants, _write_table3),
    Preset("table5", "non-originators with negative income", table5_variants, _write_table5),
    Preset("appendixE", "free service variants with 20% originators", appendix_e_variants, _write_appendix_e),
    Preset("appendixF", "caching with LRU and LFU at several cache sizes", appendix_f_variants, _write_appendix_f),
    Preset("appendixI", "payment models vs request rate: effective download rate", appendix_i_variants,
           _write_appendix_i),
)}


def preset_configs(name: str, base: ExperimentConfig | None = None) -> dict[str, ExperimentConfig]:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    return PRESETS[name].variants(base or ExperimentConfig())


def run_preset(name: str, base: ExperimentConfig, out, parallel: int = 1, argv=None) -> list[Path]:
    """Run every variant of preset ``name`` and write its CSVs plus a manifest into ``out``."""
    variants = preset_configs(name, base)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    results: dict[str, ExperimentResult] = {}
    for i, (label, cfg) in enumerate(variants.items(), start=1):
        log.info("%s: variant %d/%d %s", name, i, len(variants), label)
        results[label] = run_experiment(cfg.validate(), parallel)
    paths = PRESETS[name].write(out, results, base)
    paths.append(write_manifest(out, base, name, argv))
    return paths
