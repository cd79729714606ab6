"""Posterior contraction at desk scale.

Runs a small version of the rate study for the diffusion model and for
fixed-design regression, and compares fitted log-log slopes with the
theoretical exponents.  Pass a larger replicate count as the first argument
for a tighter estimate.
"""

import math
import sys

from schauderdrift.experiments import RateStudyConfig, contraction_study, regression_study

reps = int(sys.argv[1]) if len(sys.argv) > 1 else 5
cfg = RateStudyConfig(horizons=(250.0, 1000.0, 4000.0, 16000.0), replicates=reps)

for label, study in (("diffusion", contraction_study), ("regression", regression_study)):
    table = study(cfg)
    print(f"{label}, {reps} replicates")
    for p in (2.0, math.inf):
        ts, means = table.mean_errors(p)
        errs = ", ".join(f"{e:.4f}" for e in means)
        print(f"  p = {p}: mean errors [{errs}]  slope {table.fitted_slope[p]:+.3f}  target {table.target_slope[p]:+.3f}")
