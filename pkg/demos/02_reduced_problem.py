# # The reduced problem for a tower of k bubbles
#
# After the finite-dimensional reduction the tower is described by rates
# ρ_1..ρ_k, offsets σ_2..σ_k and a concentration point ξ.  With
# s_i = ρ_{i+1}/ρ_i and s_k = ρ_k the reduced energy separates, so the
# critical point in s has a closed form.  Here we compare it with Newton,
# look at the Hessian, and turn the critical point into blow-up rates.

import numpy as np

from bubbletower import (ReducedPoint, Region, critical_point_closed_form, critical_point_newton,
                         psi_hat_grad, stable_critical_certify, tower_prediction, unit_ball)
from bubbletower.greenfn import robin_grad

n, k = 6, 2
dom = unit_ball(n)
xi = np.zeros(n)
sigma = np.zeros((k - 1, n))

s_star = critical_point_closed_form(k, sigma, xi, dom)
print("closed-form s:", s_star)
print("gradient there:", psi_hat_grad(ReducedPoint(s_star, sigma, xi), dom)[:k])

# ## Newton from a perturbed start
#
# The iteration works in ln s and caps each step at a factor e.

start = ReducedPoint((1.4, 0.7), np.full((1, n), 0.1), np.full(n, 0.05))
found = critical_point_newton(start, dom, fix="none")
print(f"\nNewton: {found.iterations} steps, s = {np.array(found.s)}")
print("inertia (pos, neg, zero):", found.inertia)
print("max |sigma|, |xi|:", np.abs(found.sigma).max(), np.abs(found.xi).max())

# The σ block is a maximum (negative eigenvalues) and the s and ξ blocks are
# minima, so the point is a nondegenerate saddle.  Degeneracy would show up as
# a zero count in the inertia.

# ## Where does the tower sit?
#
# In the ball the Robin function is radial with a single minimum at the
# centre.  Counting the zeros of ∇R with their Jacobian signs gives degree one.

rep = stable_critical_certify(lambda x: robin_grad(unit_ball(3), x), Region.ball((0, 0, 0), 0.5),
                              unit_ball(3), starts=16)
print(f"\ndegree of grad R on |x| < 0.5: {rep.degree} (certified: {rep.certified})")

# ## Blow-up rates
#
# For k = 2 the ratio λ₁/λ₂³ has a finite limit fixed by R(ξ).  The residual
# is already at roundoff for moderate ε because the leading-order rates carry
# no corrections.

for eps in (1e-2, 1e-4, 1e-8):
    out = tower_prediction(eps, k, xi, dom)
    lim = out["k2_limits"]
    print(f"eps = {eps:.0e}  lambdas = {out['lambdas']}  scale residual = {lim['scale_residual']:.2e}"
          f"  Gamma2 residual = {lim['gamma2_residual']:.3e}")
