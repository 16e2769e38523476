"""Print the independent oracles: the cos^2 constant and the stagnation-point integral.

Usage: python3 scripts/check_oracles.py
"""

from vilab.diagnostics import COS2_BOUND, cos2_closed_form, cos2_constant, lambda_oracle
from vilab.initial_data import ConstructionParams


def run():
    for lam, x1 in ((3, 1.0), (6, 0.7), (4, 1.0)):
        print(f"cos2 lambda={lam} x1*={x1}: cubature {cos2_constant(lam, x1)!r} "
              f"closed form {cos2_closed_form(lam, x1)!r} bound {COS2_BOUND!r}")
    for N in (1, 3):
        print(f"Lambda(0, 0) oracle, N={N}: {lambda_oracle(ConstructionParams(N=N))!r}")


if __name__ == "__main__":
    run()
