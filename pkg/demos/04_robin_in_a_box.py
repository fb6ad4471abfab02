# # The Robin function of a box
#
# Outside the ball there is no closed form for the regular part H of the
# Green's function.  On a box we solve for H(x, ·) on a grid: the boundary
# data is the singular kernel |x - y|^{-1} and the interior is harmonic.  The
# Robin function R(x) = H(x, x) then drives where a tower can concentrate.

import numpy as np

from bubbletower import box, robin, unit_ball
from bubbletower.greenfn import ball_grid_solve, green_H, robin_grad
from bubbletower.suites import fit_order

x = np.array([0.2, -0.1, 0.05])

# ## Convergence in the grid size
#
# The second-order stencil should give errors falling like h².  We have no
# exact answer, so successive differences stand in for the errors.

grids = (16, 32, 64)
vals = [robin(box(resolution=g), x) for g in grids]
diffs = [abs(vals[0] - vals[1]), abs(vals[1] - vals[2])]
print("R(x) on grids", grids, ":", vals)
print(f"observed order from differences: {np.log2(diffs[0] / diffs[1]):.2f}")

# ## A check against the ball
#
# The same kind of solver on the ball (with boundary arms cut at the sphere)
# reproduces the closed form.  At this particular node the error falls
# faster than h², which is luck of the node rather than a property of the
# scheme.

h_err = []
for N in (16, 32, 64):
    ax, v = ball_grid_solve(x, N)
    i = int(np.argmin(np.abs(ax - 0.25)))
    j = int(np.argmin(np.abs(ax)))
    exact = green_H(unit_ball(3), x, np.array([ax[i], ax[j], ax[j]]))
    h_err.append(abs(v[i, j, j] - exact))
print("\nball errors:", h_err)
print(f"fitted order: {fit_order([2 / 16, 2 / 32, 2 / 64], h_err):.2f}")

# ## The gradient of R
#
# Symmetry pins the critical point of R at the centre of a symmetric box.

for pt in ([0.0, 0.0, 0.0], [0.3, 0.0, 0.0], [0.0, -0.4, 0.2]):
    g = robin_grad(box(resolution=32), np.array(pt))
    print(f"grad R{tuple(pt)} = {np.round(g, 5)}")
