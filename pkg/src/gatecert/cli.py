"""Batch command line surface: decompose, simulate, bounds, certify.

Every command is file-in/file-out and deterministic for a fixed config:
output JSON is written with sorted keys, tables in the line-oriented
format of :mod:`gatecert.network`, and all files are replaced atomically.

Exit codes: 0 success (certify: certified), 1 not certified, 2 malformed
input or configuration.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .adversary import apply_adversary, load_adversary
from .bell import classical_bound, functional_I, functional_K, k_sign_bits, seesaw_max
from .certify import certify, save_report
from .decomp import delta_set, f_coeffs
from .network import (
    ALMOST_DI,
    DI,
    PERP,
    ProbabilityTable,
    born_table,
    load_table,
    reference_realization,
    save_table,
)
from .primitives import gate, gate_from_record, ghz_bits

SCHEME_FLAGS = {"almost-di": ALMOST_DI, "di": DI}
_PAULI_LETTERS = "ZXYI"


def _write_json(path: str, payload: dict) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
    os.replace(tmp, path)


def _resolve_gate(spec: str, n: int, seed: int):
    if os.path.isfile(spec):
        with open(spec) as fh:
            record = json.load(fh)
        return gate_from_record(record, n)
    return gate(spec, n, seed=seed)


def _marginals(table: ProbabilityTable) -> dict:
    n = table.n
    x0 = (0,) * n
    key = (x0, 0) if table.scheme == ALMOST_DI else (x0, 0, PERP)
    p_l = [table.signed_sum(key, l=l) for l in range(2**n)]
    out = {"p_l": p_l}
    if table.scheme == DI:
        out["p_r"] = [
            [table.signed_sum(key, r={i: k}) for k in range(4)] for i in range(1, n + 1)
        ]
    return out


def _build_realization(args):
    scheme = SCHEME_FLAGS[args.scheme]
    u = _resolve_gate(args.gate, args.n, args.seed)
    branch = +1 if args.branch == "plus" else -1
    real = reference_realization(args.n, u, branch=branch, scheme=scheme)
    adversary = None
    if args.adversary:
        spec = load_adversary(args.adversary)
        real = apply_adversary(real, spec)
        adversary = spec.to_record()
    return real, u, adversary


def cmd_simulate(args) -> int:
    real, _, adversary = _build_realization(args)
    table = born_table(real)
    os.makedirs(args.out, exist_ok=True)
    save_table(table, os.path.join(args.out, "table.jsonl"))
    summary = {
        "scheme": table.scheme,
        "n": table.n,
        "gate": args.gate,
        "branch": args.branch,
        "seed": args.seed,
        "settings_rows": len(list(table.keys())),
        "adversary": adversary,
    }
    summary.update(_marginals(table))
    _write_json(os.path.join(args.out, "summary.json"), summary)
    print(f"wrote {args.out}/table.jsonl ({summary['settings_rows']} settings rows)")
    print("p(l):", " ".join(f"{p:.6f}" for p in summary["p_l"]))
    if "p_r" in summary:
        for i, row in enumerate(summary["p_r"], start=1):
            print(f"p(r_{i}):", " ".join(f"{p:.6f}" for p in row))
    return 0


def cmd_bounds(args) -> int:
    if args.n > 3:
        raise ValueError("bounds enumeration is limited to n <= 3")
    rows = []
    for l in range(2**args.n):
        func = functional_I(ghz_bits(l, args.n))
        res = seesaw_max(func, restarts=args.restarts, seed=args.seed)
        rows.append(
            {
                "functional": func.label,
                "classical": classical_bound(func),
                "seesaw": res.value,
                "reference": 3.0 * (args.n - 1),
            }
        )
    for k in range(4):
        func = functional_K(1, k_sign_bits(k), args.n)
        res = seesaw_max(func, restarts=args.restarts, seed=args.seed)
        rows.append(
            {
                "functional": func.label,
                "classical": classical_bound(func),
                "seesaw": res.value,
                "reference": 2.0,
            }
        )
    for row in rows:
        print(
            f"{row['functional']:>12}: classical {row['classical']:.9f}  "
            f"seesaw {row['seesaw']:.9f}  reference {row['reference']:.9f}"
        )
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write_json(os.path.join(args.out, "bounds.json"), {"n": args.n, "rows": rows})
        print(f"wrote {args.out}/bounds.json")
    return 0


def cmd_certify(args) -> int:
    if args.table:
        table = load_table(args.table)
        real = None
        n = table.n
        if args.n is not None and args.n != n:
            raise ValueError(f"--n {args.n} does not match table n={n}")
        u = _resolve_gate(args.gate, n, args.seed)
    else:
        if args.n is None:
            raise ValueError("--n is required when no table file is given")
        real, u, _ = _build_realization(args)
        table = born_table(real)
    report = certify(table, u, tol=args.tol, realization=real, op_tol=args.op_tol)
    print(report.summary())
    if real is None:
        print("operator-level checks unavailable (statistics-only mode)")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        save_report(report, os.path.join(args.out, "report.json"))
        print(f"wrote {args.out}/report.json")
    return 0 if report.verdict == "certified" else 1


def cmd_decompose(args) -> int:
    u = _resolve_gate(args.gate, args.n, args.seed)
    deltas = delta_set(u)
    rows = []
    for l, delta in enumerate(deltas):
        coeffs = f_coeffs(delta)
        terms = {}
        for idx in np.ndindex(coeffs.shape):
            c = float(coeffs[idx])
            if abs(c) > 1e-15:
                terms["".join(_PAULI_LETTERS[v] for v in idx)] = c
        rows.append(
            {
                "l": "".join(str(b) for b in ghz_bits(l, args.n)),
                "coefficients": terms,
                "sum_of_squares": float(np.sum(coeffs**2)),
            }
        )
    for row in rows:
        print(f"l={row['l']}: {len(row['coefficients'])} terms, "
              f"sum of squares {row['sum_of_squares']:.9f}")
        for word in sorted(row["coefficients"]):
            print(f"  {word}: {row['coefficients'][word]:+.9f}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write_json(os.path.join(args.out, "decomp.json"), {"gate": args.gate, "n": args.n, "rows": rows})
        print(f"wrote {args.out}/decomp.json")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gatecert",
        description="Simulate, bound, and certify gate implementations on small quantum networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, need_n=True, table_mode=False):
        p.add_argument("--scheme", choices=sorted(SCHEME_FLAGS), default="almost-di")
        if need_n:
            p.add_argument("--n", type=int, choices=(2, 3), required=not table_mode, default=None)
        p.add_argument("--gate", required=True, help="gate name or JSON file")
        p.add_argument("--branch", choices=("plus", "minus"), default="plus")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--adversary", default=None, help="adversary spec JSON file")

    p_sim = sub.add_parser("simulate", help="write the probability table of a realization")
    common(p_sim)
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.set_defaults(func=cmd_simulate)

    p_bounds = sub.add_parser("bounds", help="classical and see-saw bounds for the protocol functionals")
    p_bounds.add_argument("--n", type=int, choices=(2, 3), required=True)
    p_bounds.add_argument("--seed", type=int, default=0)
    p_bounds.add_argument("--restarts", type=int, default=8)
    p_bounds.add_argument("--out", default=None, help="output directory")
    p_bounds.set_defaults(func=cmd_bounds)

    p_cert = sub.add_parser("certify", help="run all protocol checks against a target gate")
    common(p_cert, table_mode=True)
    p_cert.add_argument("--table", default=None, help="existing table file (statistics-only mode)")
    p_cert.add_argument("--tol", type=float, default=1e-9)
    p_cert.add_argument("--op-tol", type=float, default=1e-8)
    p_cert.add_argument("--out", default=None, help="output directory")
    p_cert.set_defaults(func=cmd_certify)

    p_dec = sub.add_parser("decompose", help="coefficient tensor of the target gate per joint outcome")
    p_dec.add_argument("--n", type=int, choices=(2, 3), required=True)
    p_dec.add_argument("--gate", required=True, help="gate name or JSON file")
    p_dec.add_argument("--seed", type=int, default=0)
    p_dec.add_argument("--out", default=None, help="output directory")
    p_dec.set_defaults(func=cmd_decompose)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "tol", 1.0) <= 0:
        print("error: --tol must be positive", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
