"""Uniform refinement study: error, estimator and effectivity per level.

    python3 scripts/run_convergence.py --families P1 Q1 --levels 4 --out out/convergence
"""

from __future__ import annotations

import argparse
from pathlib import Path

from karst.elements import reference_basis
from karst.mesh import TRIANGLE, DomainGeometry
from karst.verification.cases import CASES, make_case
from karst.verification.study import run_study, studies_to_csv, uniform_meshes


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--case", default="smooth", choices=list(CASES))
    ap.add_argument("--families", nargs="+", default=["P1", "Q1"])
    ap.add_argument("--n0", type=int, default=8)
    ap.add_argument("--levels", type=int, default=4)
    ap.add_argument("--mode", default=None, choices=[None, "anisotropic", "isotropic"])
    ap.add_argument("--out", default="out/convergence")
    args = ap.parse_args()

    geom = DomainGeometry(1.0, 1.0)
    case = make_case(args.case, geom)
    results = []
    for fam in args.families:
        tri = reference_basis(fam).shape == TRIANGLE
        res = run_study(case, fam, uniform_meshes(geom, args.n0, args.levels, tri), args.mode, label="uniform")
        results.append(res)
        print(f"{fam} on {args.case}")
        print(f"  {'dofs':>7} {'error':>11} {'theta':>11} {'eff':>6} {'rate(e)':>8} {'rate(th)':>8}")
        er, tr = res.rates("error"), res.rates("theta")
        for i, r in enumerate(res.records):
            re_ = f"{er[i - 1]:8.3f}" if i else " " * 8
            rt = f"{tr[i - 1]:8.3f}" if i else " " * 8
            print(f"  {r.n_dofs:7d} {r.error:11.4e} {r.theta:11.4e} {r.effectivity:6.3f} {re_} {rt}")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    studies_to_csv(results, out / "convergence.csv")
    print(f"wrote {out / 'convergence.csv'}")


if __name__ == "__main__":
    main()
