"""Fourier coefficients, influences and the noise operator on K3^n."""
import numpy as np

from removal.chain import ProductSpace, complete_graph_chain
from removal.functions import PointFunction, fourier_expand, influences, noise_operator, random_function


def main(seed: int = 1):
    space = ProductSpace(complete_graph_chain(3), 3)
    dictator = PointFunction.dictator(space, 0, 0)
    exp = fourier_expand(dictator)
    nonzero = np.flatnonzero(np.abs(exp.coefficients) > 1e-12)
    print("dictator x0 = 0 on K3^3")
    for s in nonzero:
        print(f"  S = {space.point(int(s))}  coefficient {exp.coefficients[s]: .6f}")
    print("influences:", np.round(influences(dictator), 12), "(2/9 on coordinate 0)")

    rng = np.random.default_rng(seed)
    f = random_function(space, rng, signed=True)
    print("\nrandom signed f: total influence vs the (1 - eta^2)^-2 budget")
    for eta in (0.5, 0.7, 0.9, 0.99):
        total = float(influences(noise_operator(f, eta)).sum())
        print(f"  eta = {eta:<4}  sum Inf(N f) = {total:.4f}   budget {(1 - eta ** 2) ** -2:.1f}")

    smooth = noise_operator(dictator, 0.9)
    print("\nN_0.9 of the dictator keeps its mean:", round(smooth.mean(), 12), "range",
          (round(float(smooth.values.min()), 4), round(float(smooth.values.max()), 4)))
    return influences(dictator)


if __name__ == "__main__":
    main()
