"""Smoke test for the Python bindings.

Build first:  pip install --no-build-isolation -e crates/py
Run:          python python/smoke_test.py
"""

import math
import sys

import plasma_branch_py as pb


def main() -> int:
    b = pb.Branch(dim=2, p=2.0, grid_n=513)
    lp = b.lambda_plus
    lt = b.lambda_turn()
    assert 0.0 < lt < lp, (lt, lp)

    # λ = 0 is the torsion problem: α = 1, E = 1/(16π)
    start = b.point(0.0)
    assert start["alpha"] == 1.0
    assert abs(start["E"] - 1.0 / (16.0 * math.pi)) < 1e-12

    sol = b.solve(0.5 * lp)
    ref = b.point(0.5 * lp)
    assert abs(sol["alpha"] - ref["alpha"]) < 1e-4, (sol["alpha"], ref["alpha"])
    assert sol["entropy_defect"] < 1e-8

    spec = b.spectrum(0.5 * lp)
    assert spec["sigma1"] > 0.0

    bell = b.bell(samples=100)
    assert abs(bell["E_inf"] - 3.0 / (16.0 * math.pi)) < 1e-6
    assert len(bell["rows"]) == 100

    j01 = 2.404825557695773
    assert abs(pb.sobolev(2, 2.0) - math.pi * j01**2) < 1e-3

    try:
        pb.Branch(dim=3, p=3.0)
    except ValueError:
        pass
    else:
        raise AssertionError("p = p_N accepted")

    print(f"ok: lambda_plus = {lp:.10f}, lambda_t = {lt:.10f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
