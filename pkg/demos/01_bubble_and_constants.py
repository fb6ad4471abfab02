# # Bubbles and their constants
#
# A bubble in dimension n is the positive solution of -Δu = u^p on R^n with
# p = (n+2)/(n-2), concentrated at a point a with scale λ.  Everything else in
# the package is measured in units of a few integrals of these functions.
# This script evaluates one bubble, checks that it solves the equation, and
# prints the constants for n = 3..8.

import numpy as np

from bubbletower import Bubble, bubble_eval, critical_exponent, universal_constants
from bubbletower.core import NonlinearityParams, f_eval

# ## One bubble
#
# The peak grows like λ^{(n-2)/2} and the tail decays like |y|^{2-n}.

n = 4
b = Bubble((0.0,) * n, 50.0, n)
for r in (0.0, 0.01, 0.1, 1.0):
    y = np.array([r] + [0.0] * (n - 1))
    print(f"r = {r:5.2f}   delta = {bubble_eval(b, y):.6e}")

# A five-point Laplacian confirms -Δδ = δ^p away from roundoff.

y = np.array([0.013, -0.004, 0.0, 0.002])
h = 1e-4
lap = sum(bubble_eval(b, y + h * e) - 2 * bubble_eval(b, y) + bubble_eval(b, y - h * e)
          for e in np.eye(n)) / h ** 2
p = critical_exponent(n)
print(f"\n-lap(delta) / delta^p = {-lap / bubble_eval(b, y) ** p:.8f}")

# ## The damped nonlinearity
#
# The logarithmic factor only bites for large |u|, and it bites very slowly.

pr = NonlinearityParams(0.05, n)
for u in (1.0, 1e3, 1e6):
    print(f"u = {u:8.0e}   f_eps/f_0 = {f_eval(pr, u) / u ** p:.6f}")

# ## Constants
#
# S is the integral of δ^{p+1}, c̄₁ the mass of δ^p.  Γ₁ is computed from its
# defining integral.  The last column is the relative distance to the
# alternative closed form (n-2)²S/(4n); the two agree only for n = 4.

print("\n n        S            cbar1          Gamma1       alt. gap")
for n in range(3, 9):
    c = universal_constants(n)
    print(f" {n}  {c.Sn_pow:12.6f}  {c.cbar1:14.6f}  {c.Gamma1:12.6f}  {c.gamma1_closed_residual:.3e}")
