# # Energy of a single projected bubble in the 4-ball
#
# The energy of a tower exceeds k·S/n by a small amount driven by the
# logarithmic damping and by the boundary.  For one bubble in the unit ball
# of R^4 we integrate the energy numerically and set it against the
# expansion, term by term.

import numpy as np

from bubbletower import TowerConfig, energy_numeric, unit_ball
from bubbletower.energy import energy_expansion_terms

n = 4
dom = unit_ball(n)

print("   eps       excess        loglog        const         psi       rel. gap")
for eps in 10.0 ** -np.arange(2, 13, 2):
    cfg = TowerConfig(n, 1, eps, (0.0,) * n, (1.0,), (1.0,))
    ex = energy_numeric(cfg, dom).excess
    t = energy_expansion_terms(cfg, dom)
    model = t["loglog"] + t["const"] + t["psi"]
    print(f"{eps:8.0e}  {ex:12.5e}  {t['loglog']:12.5e}  {t['const']:12.5e}  {t['psi']:12.5e}"
          f"  {ex / model - 1:9.2e}")

# The relative gap falls roughly like 1/ln(1/ε): the next term of the
# expansion is of size ε/ln(1/ε) and the displayed terms omit it.  Scaling
# the residual by L/ε with L = ln(1/ε) exposes that term.  It still drifts
# at ε = 1e-80 because its own corrections are powers of ln(L)/L.

for eps in (1e-20, 1e-40, 1e-80):
    cfg = TowerConfig(n, 1, eps, (0.0,) * n, (1.0,), (1.0,))
    t = energy_expansion_terms(cfg, dom)
    resid = energy_numeric(cfg, dom).excess - sum(v for key, v in t.items() if key != "alpha")
    print(f"eps = {eps:.0e}   residual * L / eps = {resid * cfg.L / eps:.4f}")
