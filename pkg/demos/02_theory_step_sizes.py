"""Worked step-size arithmetic for the n = 10^4 reference configuration.

Shows the estimator constants (rho, C, C_hat), the derived M and delta, and
the resulting theoretical steps for both methods and both estimators.
"""

from vrsplit.estimators import (lsvrg_constants, saga_constants, vfr_theory,
                                vfrbs_theory)

n, gamma, L = 10_000, 0.75, 1.0
b = int(n ** (2 / 3))
p = n ** (-1 / 3)

print(f"n={n}, gamma={gamma}, L={L}, b=floor(n^(2/3))={b}, p=n^(-1/3)={p:.4f}\n")

for label, consts in (("loopless-svrg", lsvrg_constants(gamma, b, p)),
                      ("saga", saga_constants(gamma, n, b))):
    print(f"[{label}] rho={consts.rho:.6f}  C={consts.C:.6f}  "
          f"C_hat={consts.C_hat:.6f}  Lambda={consts.lam:.4f}")
    for name, fn in (("root finding", vfr_theory), ("splitting", vfrbs_theory)):
        t = fn(gamma, consts, L)
        line = (f"  {name:<13} M={t.M:9.4f}  delta={t.delta:.5f}  "
                f"eta={t.eta:.4f}/L")
        if t.sigma is not None:
            line += f"  sigma={t.sigma:.4f}"
        print(line)
    print()

print("larger snapshot probability buys a bigger admissible step:")
for p_big in (0.1, 0.2, 0.5):
    t = vfr_theory(gamma, lsvrg_constants(gamma, 464, p_big), L)
    print(f"  p={p_big:<5} -> eta = {t.eta:.4f}/L")
