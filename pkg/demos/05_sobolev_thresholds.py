"""Microlocal Sobolev order from the convergence of weighted cone norms.

For each order s the partial sums of <xi>^{2s} |V|^2 over growing balls in
the cone are classified Finite or Divergent from their tail increments. A
bisection over s locates the switch, which estimates the largest s with
f in H^s microlocally: -1/2 for the delta, 1/2 for a jump, 3/2 for a kink.
"""
from wfscope import PhasePoint, wf_sobolev_detect
from wfscope.corpus import validate_against_ground_truth, get_member, sample

for name in ("delta", "heaviside", "abs_t"):
    for row in validate_against_ground_truth(name):
        if row.check == "sobolev_threshold" and row.point.direction == (1.0,):
            print(f"{name:10s} s* = {row.observed:+.3f}  (expected {row.expected:+.1f})  {row.detail}")

m = get_member("heaviside")
f = sample(m)
cfg = m.detector_config(f.grid)
for s in (0.2, 0.4, 0.6, 0.8):
    v = wf_sobolev_detect(f, PhasePoint((0.0,), (1.0,)), s, cfg)
    print(f"heaviside at s={s}: tail {v.tail.value}, verdict {v.verdict.value}")
