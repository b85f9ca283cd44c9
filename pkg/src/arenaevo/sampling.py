"""Random sampling of sequence space per gene count.

For each gene count k the sampler draws independent genomes, scores them,
and counts those meeting the viability threshold.  Duplication conditions
draw one random gene and copy it k times, mirroring how evolved genomes
under that origin are initially built; de novo conditions draw k
independent sequences.  Start positions follow the condition's scheme,
with a fresh draw per gene per sample under the random scheme.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .arena import score_genome
from .evolution import TrialConfig
from .genome import Gene, Genome, random_sequence, resolve_start
from .stats import StatResult, ks_two_sample, wilson_interval


def draw_sample_genome(
    condition: TrialConfig, gene_count: int, rng: np.random.Generator
) -> Genome:
    grid_size = condition.arena.grid.size
    if condition.origin == "duplication":
        seq = random_sequence(rng, condition.gene_length)
        sequences = [seq] * gene_count
    else:
        sequences = [random_sequence(rng, condition.gene_length) for _ in range(gene_count)]
    return [
        Gene(seq, resolve_start(condition.start_scheme, i, grid_size, rng))
        for i, seq in enumerate(sequences)
    ]


def sample_solution_counts(
    condition: TrialConfig,
    gene_counts: Sequence[int],
    rng: np.random.Generator,
    samples_per_count: int = 65536,
    threshold: float = 1.0,
) -> list[dict]:
    """Qualifying-sample counts per gene count, with Wilson 95% intervals.

    A sample qualifies when its score is at least threshold * max score.
    The draws depend only on the rng stream, so re-running with a lower
    threshold on the same seed counts supersets of the same genomes.
    """
    if not gene_counts:
        raise ValueError("gene_counts must be non-empty")
    if threshold not in (0.5, 1.0):
        raise ValueError("threshold must be 0.5 or 1.0")
    setup = condition.game_setup()
    target = threshold * setup.max_score
    rows = []
    for k in gene_counts:
        qualifying = 0
        for _ in range(samples_per_count):
            genome = draw_sample_genome(condition, k, rng)
            if score_genome(genome, setup) >= target:
                qualifying += 1
        low, high = wilson_interval(qualifying, samples_per_count)
        rows.append(
            {
                "attack_kind": condition.attack_kind,
                "start_scheme": condition.start_scheme,
                "friendly_fire": "ff" if condition.friendly_fire else "safe",
                "origin": condition.origin,
                "gene_count": k,
                "samples": samples_per_count,
                "qualifying": qualifying,
                "threshold": threshold,
                "rate_low": low,
                "rate_high": high,
            }
        )
    return rows


def expand_sampled_counts(rows: Sequence[dict]) -> list[int]:
    """Raw per-genome gene counts of the qualifying samples."""
    out: list[int] = []
    for row in rows:
        out.extend([row["gene_count"]] * row["qualifying"])
    return out


def compare_distributions(
    sampled_rows: Sequence[dict], evolved_gene_counts: Sequence[int]
) -> StatResult:
    """Two-sided two-sample K-S between qualifying sampled gene counts and
    evolved gene counts, on the raw unrescaled samples."""
    sampled = expand_sampled_counts(sampled_rows)
    if not sampled or not len(evolved_gene_counts):
        raise ValueError("both samples must be non-empty")
    return ks_two_sample(sampled, list(evolved_gene_counts))
