"""Detectability thresholds and the mixture/ASD distance scaling.

Run:  python demos/05_detectability_and_wasserstein.py   (takes ~a minute)
"""

import structscan as ss

# mu_detect: the smallest mean where the GLR test gets both error rates
# under 1%.  Bigger families need bigger means.
for fam in (ss.interval_family(200), ss.unstructured_family(200)):
    details = ss.estimate_mu_detect(
        fam, 200, 10, trials_null=400, trials_alt=400, seed=5, return_details=True
    )
    print(f"{fam.kind:14s} mu_detect = {details.mu_detect:g} "
          f"(null 99% threshold {details.threshold:.2f})")
    print("   type-II curve:", [(m, round(e, 3)) for m, e in details.curve[:6]])

# The i.i.d. mixture and the fixed-size anomalous-subset data converge in
# 1-Wasserstein distance at the n^{-1/2} rate.
res = ss.wasserstein_scaling(
    [(0.2, 3.0)], n_grid=[100, 1000, 10_000], trials=10, seed=6
)
print("\nmean distances by n:", [round(d, 4) for d in res.distances[0]])
print("log-log slope:", round(res.slopes[0], 3), "(reference: -0.5)")
