"""
Approximate kernels
===================

The infinite-width kernel E[phi(u1) phi(u2)] for correlated standard
normals, computed three ways.
"""

import numpy as np

from orthokernel import builtin, normalize
from orthokernel.kernel import SigmaPair, approx_kernel_mc, approx_kernel_quadrature, closed_form_kernel

erf = builtin("erf")
print(" c      quadrature        closed form       Monte Carlo (1e6)")
for c in (-1.0, -0.5, 0.0, 0.5, 1.0):
    s = SigmaPair.from_correlation(c)
    q = approx_kernel_quadrature(s, erf).value
    cf = closed_form_kernel("erf", c).value
    mc = approx_kernel_mc(s, erf, 1_000_000, seed=0)
    print(f"{c:5.1f}  {q:.15f}  {cf:.15f}  {mc.value:.5f} +- {mc.stderr:.5f}")

# Normalising rescales phi so that E[phi(x)^2] = 1; the sup bound C grows
# by the same factor.
tanh = normalize(builtin("tanh"))
print("\nnormalised tanh:", tanh.describe())
print("kernel at c = 1:", approx_kernel_quadrature(SigmaPair.from_correlation(1.0), tanh).value)

# Odd activations give odd kernels.
grid = np.linspace(-1, 1, 9)
vals = [approx_kernel_quadrature(SigmaPair.from_correlation(c), tanh).value for c in grid]
print("tanh kernel on a grid:", np.round(vals, 6))
