"""Kneser layers: Edge densities, the averaging lift, and intersecting captures."""
from fractions import Fraction

import numpy as np

from removal.kneser import (
    LayerFunction,
    c_constant,
    code_to_set,
    down_inner_sum,
    edge_cube,
    edge_layer,
    kneser_capture,
    up_lift,
)


def main(seed: int = 4):
    n, k, p = 9, 3, Fraction(1, 3)
    print(f"K({n},{k}) with p = {p}: c(p, n) = {c_constant(p, n):.5f}")
    rng = np.random.default_rng(seed)
    f = LayerFunction(n, k, rng.random(84))
    g = up_lift(f, p)
    print(f"random f: Edge_layer = {edge_layer(f):.5f}, Edge_cube(lift) = {edge_cube(g):.5f}")

    star = LayerFunction.star(n, k, 0)
    res = kneser_capture(star, 0.05, p)
    print(f"\nstar: J = {res.J}, T = {[code_to_set(len(res.J), t) for t in res.T]}, loss = {res.captured_loss}")
    values = star.values.copy()
    values[rng.choice(np.flatnonzero(values == 0))] = 1.0
    res = kneser_capture(LayerFunction(n, k, values), 0.05, p)
    print(f"perturbed star: Edge = {res.edge_layer:.4f} (unordered {res.edge_layer_unordered:.4f}), "
          f"loss = {res.captured_loss:.4f} <= {5 * 0.05}, intersecting = {res.intersecting}")
    print(f"\ninner sum at n=64, k=16, |J|=2, |w|=1: {down_inner_sum(0.25, 64, 16, 2, 1):.4f} (> 1/5)")
    return res


if __name__ == "__main__":
    main()
