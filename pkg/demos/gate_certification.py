# End-to-end certification of a two-qubit gate from measurement statistics.
#
# Simulate the reference network for a CNOT, collect the full probability
# table, and run the certifier against the claimed gate.  Then show what
# happens when the claim is wrong (a CZ instead): the Bell rows still pass,
# but every tomographic cross-check fails.

from gatecert import born_table, certify, gate, reference_realization


def main():
    u = gate("cnot", 2)
    real = reference_realization(2, u)
    table = born_table(real)
    print(f"simulated {len(table.entries)} settings rows for a CNOT reference\n")

    report = certify(table, u, realization=real)
    print("--- certifying against CNOT (correct claim) ---")
    print(report.summary())

    wrong = certify(table, gate("cz", 2))
    print("\n--- certifying the same table against CZ (wrong claim) ---")
    failed = wrong.failed()
    print(f"verdict: {wrong.verdict}, {len(failed)} failing checks:")
    for row in failed:
        print(f"  {row.id}: value {row.lhs:+.6f}, expected {row.rhs:+.6f}")


if __name__ == "__main__":
    main()
