# What an adversary on the hidden side can and cannot change.
#
# The certification statements are blind to everything behind the central
# node's interface: enlarging the hidden spaces (dilation), conjugating
# every element, and re-phasing the operation in the GHZ basis all leave
# the observed table untouched.  An actual deviation of the operation,
# however small, moves the tomographic rows and trips the certifier.

import numpy as np

from gatecert import (
    born_table,
    certify,
    conjugate,
    dilate,
    gauge_phase,
    gate,
    perturb,
    reference_realization,
)


def main():
    u = gate("cz", 2)
    base = reference_realization(2, u)
    table = born_table(base)

    print("invisible transformations (max change of any table entry):")
    for name, real in [
        ("dilation, junk dim 3", dilate(base, junk_dim=3, seed=1)),
        ("full conjugation", conjugate(base)),
        ("gauge phases", gauge_phase(base, np.linspace(0.3, 2.1, 4))),
    ]:
        moved = table.max_difference(born_table(real))
        verdict = certify(born_table(real), u).verdict
        print(f"  {name:<22} shift {moved:.2e}   verdict: {verdict}")

    print("\nconjugation is invisible in the table but flips the branch:")
    for real in (base, conjugate(base)):
        rep = certify(born_table(real), u, realization=real)
        print(f"  branch: {rep.branch}, verdict: {rep.verdict}")

    print("\nactual drift of the operation is caught (tol 1e-6):")
    for eps in (0.01, 0.05, 0.1):
        rep = certify(born_table(perturb(base, epsilon=eps, seed=5)), u, tol=1e-6)
        worst = max(r.residual for r in rep.checks)
        print(f"  epsilon {eps:<5} worst residual {worst:.2e}   verdict: {rep.verdict}")


if __name__ == "__main__":
    main()
