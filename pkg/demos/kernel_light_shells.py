"""Where wave-propagated kernels live: light shells and exact zeros.

A radial initial-condition prior supported on |x - x0| <= R propagates to a
space-time covariance that is nonzero only where the light shell around one
argument meets the source ball. On the diagonal this gives a sharp window:
the prior variance at (x, t) vanishes identically once | |x-x0| - c|t| | > R,
and the zeros are exact floating-point zeros, not small numbers.

Run:  python3 demos/kernel_light_shells.py
"""

import numpy as np

from wavegp.kernels import (
    Matern52,
    RadialUKernel,
    RadialVKernel,
    TruncationProfile,
    gaussian_stationary_wave,
    ku_wave,
    kv_wave,
)

c = 0.5
x0 = np.array([0.5, 0.5, 0.5])
vk = RadialVKernel(x0=x0, R=0.3, K=Matern52(rho=0.15, sigma2=1.2))
uk = RadialUKernel(x0=x0, R=0.3, k0=Matern52(rho=0.2, sigma2=0.9),
                   trunc=TruncationProfile())

print("diagonal variance along the ray x = x0 + (d, 0, 0), t = 0.8")
print("light shell: c|t| = %.2f, source radius R = %.2f" % (c * 0.8, vk.R))
print(f"{'d':>6} {'|d - c t|':>10} {'kv(z,z)':>12} {'ku(z,z)':>12}  inside?")
t = 0.8
for d in (0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.55, 0.7, 0.8, 1.0, 1.5):
    z = (x0 + np.array([d, 0.0, 0.0]), t)
    vv = kv_wave(z, z, vk, c)
    uu = ku_wave(z, z, uk, c)
    inside = abs(d - c * t) <= vk.R
    print(f"{d:6.2f} {abs(d - c * t):10.2f} {vv:12.5f} {uu:12.5f}  {inside}")

print()
print("the zeros above are exact:",
      kv_wave((x0 + [1.5, 0, 0], t), (x0 + [1.5, 0, 0], t), vk, c) == 0.0)

print()
print("time parities (bitwise): the speed kernel is odd in each time")
print("argument, the displacement kernel even")
za = (x0 + np.array([0.2, 0.1, 0.0]), 0.6)
zb = (x0 + np.array([-0.1, 0.3, 0.1]), 0.45)
za_neg = (za[0], -za[1])
print("  kv(-t) == -kv(t):", kv_wave(za_neg, zb, vk, c) == -kv_wave(za, zb, vk, c))
print("  ku(-t) ==  ku(t):", ku_wave(za_neg, zb, uk, c) == ku_wave(za, zb, uk, c))

print()
print("stationary squared-exponential prior: the propagated covariance")
print("concentrates on the shell c||t|-|t'|| <= |h| <= c(|t|+|t'|)")
tt, tp, C, L = 0.9, 0.6, 1.0, 0.1
lo, hi = c * abs(abs(tt) - abs(tp)), c * (abs(tt) + abs(tp))
print(f"t = {tt}, t' = {tp}: shell [{lo:.3f}, {hi:.3f}]")
for h in (0.05, lo, 0.5 * (lo + hi), hi, hi + 0.3):
    val = gaussian_stationary_wave(h, tt, tp, C, L, c)
    print(f"  |h| = {h:5.3f}  k = {val: .6e}")
