"""Ten-class spoken-digit pipeline on the synthetic feature-matrix surrogate.

Pairs of classes share their tone tracks and differ only in loudness, which
a bias-free linear readout of the masked frames cannot resolve.  The
memristive reservoir responds nonlinearly to amplitude and separates them.
Takes a few minutes per network.
"""

from memrc.harness import ExperimentConfig, baseline_linear
from memrc.harness.experiment import prepare, run_task

cfg = ExperimentConfig.for_task("digits", network="rand-rp", r_mean=50, n_networks=1, surrogate=True)
data = prepare(cfg)
for s in (10, 25, 50, 100):
    lc = baseline_linear(cfg.replace(s_mask=s, l_in=s))
    print(f"linear classifier, S_mask={s:3d}: {lc.mean:.3f}")
res = run_task(cfg, data)
print(f"reservoir (Rand-RP, r=50): {res.mean:.3f} +- {res.sem:.3f}")
print(res.confusion)
