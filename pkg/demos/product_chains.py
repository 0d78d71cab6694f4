"""Product chains: stationary measures, spectra and edge weights.

Builds the complete-graph chain on three states and the biased
disjointness chain on {0, 1}, then evaluates a planted edge value on
K3 x K3 two ways.
"""
from fractions import Fraction

import numpy as np

from removal import oracles
from removal.chain import ProductSpace, complete_graph_chain, eigendecompose, quad_form
from removal.functions import PointFunction
from removal.kneser import disjointness_chain, mu_pp


def main():
    k3 = complete_graph_chain(3)
    print("K3 transition:\n", k3.transition)
    print("stationary:", k3.stationary, " w_min:", k3.w_min)
    print("eigenvalues:", eigendecompose(k3).eigenvalues)

    disj = disjointness_chain(Fraction(1, 3))
    print("\ndisjointness chain (p = 1/3):\n", disj.transition)
    print("stationary:", disj.stationary, " eigenvalues:", eigendecompose(disj).eigenvalues)

    space = ProductSpace(k3, 2)
    U = PointFunction.indicator(space, [(0, 0), (1, 1)])
    fast = quad_form(space, U, U)
    slow = oracles.quad_form_bruteforce(space, U, U)
    print(f"\n<1_U, A 1_U> on K3^2: kronecker {fast:.17f}, double sum {slow:.17f}, exact 1/18")

    cube = ProductSpace(disjointness_chain(0.25), 3)
    W = oracles.product_edge_matrix(cube)
    x, y = 0b100, 0b011
    print(f"edge weight of {{0}} -> {{1, 2}} on the p=1/4 cube: {W[x, y]:.6f} vs mu_pp {mu_pp(3, 0.25, [0], [1, 2]):.6f}")
    print("total edge mass:", round(float(W.sum()), 12))
    return fast


if __name__ == "__main__":
    main()
