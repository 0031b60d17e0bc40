"""Wave front maps: where, and in which direction, a signal is singular.

The square wave is singular at its three jumps in both directions. The
boundary value 1/(t + i0) is singular at the origin for positive
frequencies only. The 2D half-plane indicator is singular along its edge
only in the two directions normal to the edge.
"""
from wfscope import Verdict, wf_map
from wfscope.corpus import COMPASS, get_member, sample


def show(name, positions, directions):
    m = get_member(name)
    f = sample(m)
    rows = wf_map(f, positions, directions, m.detector_config(f.grid))
    sing = [(v.point.x0, v.point.direction) for v in rows if v.verdict is Verdict.SINGULAR]
    print(f"{name}: {len(sing)} singular of {len(rows)}")
    for x, u in sing:
        print("   ", x, u)


show("square_wave", [(x,) for x in (-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5)], [(1.0,), (-1.0,)])
show("plus_i0", [(-0.5,), (0.0,), (0.5,)], [(1.0,), (-1.0,)])
show("half_plane_edge", [(0.0, 0.0), (0.0, 0.5), (1.0, 0.0)], COMPASS)
