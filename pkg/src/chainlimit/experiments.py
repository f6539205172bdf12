"""Seeded experiment configurations and runners used by scripts and the acceptance suite."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chain import ReversibleChain, normalize_chain, random_reversible_rates, validate_rate_matrix
from .family import builtin_family, cutoff_detector, boundedness_report, CutoffEvidence, BoundednessReport
from .reconstruction import LOG_FLOOR, RoundtripReport, roundtrip_report


@dataclass(frozen=True)
class CorpusConfig:
    """Random reversible chains with sizes drawn uniformly from [n_min, n_max]."""

    count: int = 50
    n_min: int = 3
    n_max: int = 30
    seed: int = 0
    density: float = 0.5


def chain_corpus(cfg: CorpusConfig = CorpusConfig()) -> list[ReversibleChain]:
    sizes = np.random.default_rng(cfg.seed).integers(cfg.n_min, cfg.n_max + 1, size=cfg.count)
    return [ReversibleChain(random_reversible_rates(int(n), cfg.seed * 100_003 + i, cfg.density)) for i, n in enumerate(sizes)]


def complete_graph(n: int = 3, rate: float = 1.0) -> ReversibleChain:
    q = np.full((n, n), rate)
    np.fill_diagonal(q, 0.0)
    np.fill_diagonal(q, -q.sum(axis=1))
    return ReversibleChain(validate_rate_matrix(q, labels=[f"s{i}" for i in range(n)]))


@dataclass(frozen=True)
class RoundtripConfig:
    n_list: tuple[int, ...] = (50, 100, 200, 400)
    seeds: tuple[int, ...] = tuple(range(10))
    k: int = 2
    times: tuple[float, ...] = (0.5, 1.0, 2.0)
    degree: int = 2
    floor: float = LOG_FLOOR


@dataclass
class RoundtripResult:
    config: RoundtripConfig
    reports: list[RoundtripReport] = field(default_factory=list)

    def at(self, n: int) -> list[RoundtripReport]:
        return [r for r in self.reports if r.n == n]

    def medians(self) -> dict[int, float]:
        return {n: float(np.median([r.distance for r in self.at(n)])) for n in self.config.n_list}

    def rows(self):
        for r in self.reports:
            yield (r.n, r.seed, r.distance, r.gamma_ratio, r.floored)


def run_roundtrip(chain: ReversibleChain, cfg: RoundtripConfig = RoundtripConfig()) -> RoundtripResult:
    out = RoundtripResult(cfg)
    for n in cfg.n_list:
        for seed in cfg.seeds:
            out.reports.append(roundtrip_report(chain, n, seed, cfg.k, cfg.times, cfg.degree, cfg.floor))
    return out


def normalized_triangle() -> ReversibleChain:
    return normalize_chain(complete_graph(3)).chain


@dataclass(frozen=True)
class CutoffConfig:
    family: str = "hypercube"
    n_list: tuple[int, ...] | None = None
    normalize: bool = False
    t_lo: float = 0.5
    t_hi: float = 2.0
    threshold_grow: float = 1.0
    threshold_mix: float = 0.1


def run_cutoff(cfg: CutoffConfig) -> tuple[CutoffEvidence, BoundednessReport]:
    fam = builtin_family(cfg.family)
    if cfg.normalize:
        fam = fam.normalized()
    ev = cutoff_detector(fam, cfg.n_list, cfg.t_lo, cfg.t_hi, cfg.threshold_grow, cfg.threshold_mix)
    return ev, boundedness_report(fam, cfg.n_list, growth_threshold=cfg.threshold_grow)
