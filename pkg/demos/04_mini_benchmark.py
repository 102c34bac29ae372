"""A small benchmark grid written to ./demo_report.

The full protocol is ``gridplan bench`` with its defaults (sizes 50..450, 30
trials each); this keeps to two sizes so it finishes in under a minute.
"""
import csv
from pathlib import Path

from gridplan import BenchConfig, run_benchmark, write_report
from gridplan.bench import per_scale_scores

config = BenchConfig(sizes=(50, 100), scenarios=("random", "bars"), trials=5, training_maps=4)
report = run_benchmark(config)
paths = write_report(report, Path("demo_report"))

# %% The summary table
with open(paths["csv"]) as fh:
    for row in csv.DictReader(fh):
        print(
            f"{row['method']:<9} n={row['n']:<4} {row['scenario']:<7} "
            f"len {row['path_length_pct_mean']:>11}%  time {row['search_time_s_mean']}s  mem {row['memory_units_mean']}"
        )

# %% Normalised time scores per strategy, averaged over the two sizes
means = {}
for row in report.rows:
    if row["scenario"] == "random":
        means.setdefault(row["n"], {})[row["method"]] = float(row["search_time_s_mean"])
print({k: round(v, 3) for k, v in per_scale_scores(means).items()})
print("files:", ", ".join(p.name for p in paths.values()))
