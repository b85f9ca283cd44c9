"""One-time generator for the shipped sample analysis CSVs.

Runs the primary package's pipeline at toy scale and copies the resulting
analysis tables here.  The figures package itself never imports arenaevo;
these tables are its only interface.

Usage: python figures/samples/generate.py
"""

from __future__ import annotations

import shutil
import tempfile
from pathlib import Path

import numpy as np

from arenaevo.cli import main as arenaevo_main
from arenaevo.evolution import TrialConfig
from arenaevo.sampling import sample_solution_counts

HERE = Path(__file__).parent

RIBBON_PLAN = """arenaevo-plan v1
name = sample-ribbon
master_seed = 424242
trials_per_condition = 2
neutral_generations = 64
metric_stride = 8
output_dir = {out}
"""

DIST_PLAN = """arenaevo-plan v1
name = sample-dist
master_seed = 434343
attack_kind = ranged
regime = CNE
trials_per_condition = 4
neutral_generations = 128
metric_stride = 16
viability_threshold = 0.5
output_dir = {out}
"""


def sampler_table(path: Path) -> None:
    import csv

    rows = []
    rng = np.random.default_rng(454545)
    for start in ("same", "corners", "random"):
        for ff in (True, False):
            for origin in ("duplication", "de_novo"):
                condition = TrialConfig(
                    attack_kind="ranged",
                    start_scheme=start,
                    friendly_fire=ff,
                    origin=origin,
                    metric_stride=0,
                )
                rows.extend(
                    sample_solution_counts(
                        condition, [1, 2, 3, 4], rng, samples_per_count=768, threshold=0.5
                    )
                )
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)

        ribbon_plan = tmp / "ribbon-plan.txt"
        ribbon_plan.write_text(RIBBON_PLAN.format(out=tmp / "ribbon-results"))
        assert arenaevo_main(["run", "--plan", str(ribbon_plan), "--workers", "2"]) == 0
        assert arenaevo_main(
            [
                "analyze", "--plan", str(ribbon_plan),
                "--kind", "genes_over_time",
                "--table", str(tmp / "genes_over_time.csv"),
            ]
        ) == 0
        assert arenaevo_main(
            [
                "analyze", "--plan", str(ribbon_plan),
                "--kind", "robustness_by_genes",
                "--table", str(tmp / "robustness_by_genes.csv"),
                "--generations", "0,64",
                "--reps", "8",
            ]
        ) == 0

        dist_plan = tmp / "dist-plan.txt"
        dist_plan.write_text(DIST_PLAN.format(out=tmp / "dist-results"))
        assert arenaevo_main(["run", "--plan", str(dist_plan), "--workers", "2"]) == 0
        sampler_table(tmp / "sampled_solutions.csv")
        assert arenaevo_main(
            [
                "analyze", "--plan", str(dist_plan),
                "--kind", "gene_count_dist",
                "--table", str(tmp / "gene_count_dist.csv"),
                "--samples", str(tmp / "sampled_solutions.csv"),
            ]
        ) == 0

        for name in ("genes_over_time.csv", "robustness_by_genes.csv", "gene_count_dist.csv"):
            shutil.copy(tmp / name, HERE / name)
            print(f"wrote {HERE / name}")


if __name__ == "__main__":
    main()
