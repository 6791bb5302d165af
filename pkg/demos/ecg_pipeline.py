"""ECG-style two-class pipeline: binary mask, one drive per data column,
Case (i) and Case (ii) state collections, fixed train/test split.

Uses the ECG200 files when a directory is given on the command line and the
built-in heartbeat-like surrogate otherwise.
"""

import sys

from memrc.harness import ExperimentConfig, baseline_linear
from memrc.harness.experiment import prepare, run_task

path = sys.argv[1] if len(sys.argv) > 1 else None
cfg = ExperimentConfig.for_task("ecg", network="rand-rp", r_mean=500, v_max=0.02, n_networks=2,
                                data_path=path, surrogate=path is None)
data = prepare(cfg)
print(f"dataset {data.dataset.name}: {len(data.dataset)} series, "
      f"{len(data.inputs[0])} drives of length {len(data.inputs[0][0])} per series")
cache = {}
for case in ("i", "ii"):
    res = run_task(cfg.replace(case=case), data, cache)
    print(f"Case ({case}): accuracy {res.mean:.3f} +- {res.sem:.3f}")
    print(res.confusion)
print(f"linear baseline: {baseline_linear(cfg, data).mean:.3f}")
