"""Run the bound and invariant checks and print a one-line verdict for each.

Then corrupts one covariance constant to show that the certification can
fail.
"""

from schauderdrift.verify import all_passed, run_all

reports = run_all(seed=0)
for rep in reports:
    print(f"{'ok  ' if rep.passed else 'FAIL'} {rep.name:22s} margin {rep.worst_margin:.3e}")
print("all passed:", all_passed(reports))

mutated = run_all(seed=0, constants={"diag_lower": 0.99})
print("with diag_lower = 0.99, failing:", sorted({r.name for r in mutated if not r.passed}))
