"""Two consistency audits.

Window robustness: the verdict at a phase-space point must not depend on
which admissible window is used. Seminorm uniformity: at a Regular point
the decay bound holds uniformly over a bounded family of test windows, so
the rescaled constants stay within a small factor of each other.
"""
from wfscope import PhasePoint, seminorm_uniformity_audit, window_robustness_audit
from wfscope.corpus import ROBUSTNESS_WINDOWS, get_member, sample

m = get_member("heaviside")
f = sample(m)
cfg = m.detector_config(f.grid)
for x in (-4.0, 0.0):
    r = window_robustness_audit(f, PhasePoint((x,), (1.0,)), cfg, ROBUSTNESS_WINDOWS)
    print(f"heaviside x={x:+}: verdicts {[v.value for v in r.verdicts]}, agreement {r.agreement}")

bump = sample("smooth_bump")
rep = seminorm_uniformity_audit(bump, PhasePoint((0.0,), (1.0,)), cfg, m=20, k=6, n=4, seed=0)
print(f"smooth_bump seminorm audit: max {rep.family_max:.3e}, median {rep.median:.3e}, "
      f"ratio {rep.family_max / rep.median:.2f}, growth flag {rep.growth_flag}")
