"""Growing the few-shot repository from training maps.

With the default 0.1 thresholds a guided search must use at most a tenth of
the full search's time and memory, which the stub rarely achieves. The second
run loosens the time and memory gates to show admissions and FIFO eviction.
"""
import tempfile
from pathlib import Path

from gridplan import FewShotRepo, StubClient, Thresholds, generate_map, train

maps = [generate_map((100, 150, 200)[i % 3], "random", seed=i) for i in range(16)]

# %% Default gates
repo, audit = train(FewShotRepo(), maps, StubClient(seed=0), time_measure="expansions")
print(f"default gates: admitted {sum(r.passed for r in audit)} of {len(audit)}")
for rec in audit[:5]:
    if rec.metrics:
        dev, t, m = rec.metrics
        print(f"  map {rec.index:2d} n={rec.n}: length dev {dev:.3f}  time ratio {t:.2f}  memory ratio {m:.2f}")

# %% Looser gates, persisted to disk
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "repo.jsonl"
    repo = FewShotRepo(thresholds=Thresholds(0.05, 0.6, 0.6), path=path)
    repo, audit = train(repo, maps, StubClient(seed=0), time_measure="expansions")
    print(f"loose gates: admitted {sum(r.passed for r in audit)}, repository holds {len(repo)} (capacity {repo.capacity})")
    print("sizes over time:", [r.repo_size for r in audit])
    reloaded = FewShotRepo.load(path)
    print("reloaded from disk:", len(reloaded), "examples; first waypoints", reloaded.snapshot()[0].waypoints)
