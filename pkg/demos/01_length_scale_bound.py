"""How short is too short for a GP length-scale?

A kernel with length-scale l concentrates its spectral energy below a
frequency of roughly 1/l.  Data sampled every dt can only identify
frequencies below the Nyquist frequency 1/(2 dt), so a sensible fit should
keep most of its spectral energy under that ceiling.  Requiring a fraction
alpha of the energy inside the band yields the lower bound a_l(alpha) on
the length-scale that this script explores.
"""

import numpy as np

from shortgp import (
    delta_t_from_times,
    length_scale_bound,
    matern_energy_fraction,
    se_energy_fraction,
)

# --- the bound for the benchmark sampling grid -----------------------------
times = np.linspace(-5.0, 6.0, 7)
info = delta_t_from_times(times)
print(f"7 equally spaced points on [-5, 6]: dt = {info.delta_t:.4f}, "
      f"Nyquist frequency = {info.nyquist_frequency:.4f}")

for alpha in (0.9, 0.99, 0.999):
    a_l = length_scale_bound("se", alpha, info.delta_t)
    print(f"  alpha = {alpha}: squared-exponential bound a_l = {a_l:.4f}")

# At alpha = 0.99 the bound is about 0.82 dt, here about 1.50.

# --- the bound is just the inverse of the band-energy curve ----------------
print("\nenergy below Nyquist as the length-scale grows (dt = 1):")
for l in (0.2, 0.5, 0.82, 1.5, 3.0):
    se = se_energy_fraction(l, 1.0)
    m32 = matern_energy_fraction(1.5, l, 1.0)
    print(f"  l = {l:4.2f}:  SE {se:.4f}   Matern(3/2) {m32:.4f}")

# --- rougher processes need longer length-scales ---------------------------
print("\nbound at alpha = 0.99, dt = 1, by family:")
print(f"  SE           {length_scale_bound('se', 0.99, 1.0):8.4f}")
for nu in (0.5, 1.5, 2.5, 10.0):
    a_l = length_scale_bound("matern", 0.99, 1.0, nu=nu)
    print(f"  Matern({nu:4.1f}) {a_l:8.4f}")
print("\nThe Matern(1/2) bound is enormous: an exponential kernel spreads "
      "energy across all frequencies,\nso confining 99 percent of it takes "
      "a very long length-scale.")

# --- non-uniform sampling uses the smallest gap ----------------------------
ragged = [0.0, 0.25, 1.0, 2.0, 4.0]
info_ragged = delta_t_from_times(ragged)
print(f"\nnon-uniform times {ragged}: dt = min gap = {info_ragged.delta_t}")
print(f"bound a_l = {length_scale_bound('se', 0.99, info_ragged.delta_t):.4f} "
      "(the least restrictive choice)")
