"""Solve the analytic 2x2 nonmonotone inclusion with the splitting method.

The instance pairs a planar rotation with a small negative damping block: its
sum is nonmonotone, yet the co-hypomonotonicity certificate holds at
kappa = eps, so the theory still applies with an explicit step range.
"""

import numpy as np

from vrsplit.estimators import full_batch_constants, vfrbs_theory
from vrsplit.problems import co_hypomonotone_instance
from vrsplit.resolvents import linear_map
from vrsplit.solvers import SolverConfig, solve
from vrsplit.verify import weak_minty_certificate

eps = 0.01
inst = co_hypomonotone_instance(eps)
print("G =\n", inst.Gmat, "\nT =\n", inst.Tmat)
sym = 0.5 * (inst.sum_matrix + inst.sum_matrix.T)
print("eigenvalues of sym(G+T):", np.linalg.eigvalsh(sym), "-> nonmonotone:",
      inst.nonmonotone)

for kappa in (0.0, eps):
    rep = weak_minty_certificate(inst.Gmat, inst.Tmat, kappa)
    print(f"certificate at kappa={kappa}: min eig {rep['min_eigenvalue']:+.3e}"
          f"  {'PASS' if rep['pass'] else 'FAIL'}")

op = inst.to_operator()
theo = vfrbs_theory(0.75, full_batch_constants(), L=op.lipschitz,
                    kappa=inst.kappa)
print(f"\nL*kappa = {op.lipschitz * inst.kappa:.4f} <= delta = {theo.delta:.4f}")
print(f"admissible step range: ({theo.eta_lower:.4f}, {theo.eta:.4f}]")

cfg = SolverConfig(method="vfrbs", estimator="full", eta=theo.eta,
                   kappa=inst.kappa, max_iters=400, record_every=25)
traj = solve(op, cfg, np.array([1.5, -0.7]), T=linear_map(inst.Tmat))
print("\n  iter   ||Gx + v||")
for r in traj.records:
    print(f"  {r.iter:>4}   {r.residual:.3e}")
