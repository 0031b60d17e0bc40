"""The discrete STFT against exact values.

For the Dirac delta the transform is known in closed form,
V(x, xi) = conj(chi(-x)), independent of xi. A grid sample of height 1/dx
reproduces this to rounding. The total energy of V over phase space equals
(2 pi)^d ||f||^2 ||chi||^2 with the Fourier convention used throughout.
"""
import numpy as np

from wfscope import Grid, WindowSpec, parseval_check, stft_closed_form, stft_discrete
from wfscope.corpus import GAUSSIAN, sample

w = WindowSpec("bump", 1.0)

delta = sample("delta")
xs = np.array([-0.875, -0.3125, 0.0, 0.375])  # grid nodes
tab = stft_discrete(delta, w, xs)
exact = np.array([stft_closed_form("delta", w, x, 0.0) for x in xs])
print("delta: max |V - conj(chi(-x))| over", tab.values.size, "entries:",
      f"{np.max(np.abs(tab.values - exact[:, None])):.2e}")

g = Grid.centered(1, 2**12, 2.0**-7)
gauss = sample(GAUSSIAN, g)
x, xi = 0.25, 10 * g.frequency_spacing
row = stft_discrete(gauss, w, [x], cap_factor=None)
j = int(np.argmin(np.abs(row.freqs[:, 0] - xi)))
print(f"gaussian: discrete {row.values[0, j]:.10f} vs quadrature {stft_closed_form('gaussian', w, x, xi):.10f}")

for f in (gauss, sample("smooth_bump", g)):
    print(f"Parseval relative error for {f.label or 'signal'}: {parseval_check(f, w):.2e}")
