"""Spectral and exhaustive junta captures, then pruning to an independent set."""
import numpy as np

from removal.chain import ProductSpace, complete_graph_chain
from removal.functions import PointFunction
from removal.junta import CaptureParams, independent_junta_capture, junta_capture_bruteforce, practical_capture


def main(seed: int = 2):
    space = ProductSpace(complete_graph_chain(3), 4)
    digits = space.digits()
    rng = np.random.default_rng(seed)
    f1 = PointFunction(space, np.clip(0.9 * (digits[:, 0] == 0) + 0.1 * rng.random(space.size), 0, 1))
    f2 = PointFunction(space, np.clip(0.9 * (digits[:, 0] == 1) + 0.1 * rng.random(space.size), 0, 1))
    spec = practical_capture(f1, f2, 0.2, CaptureParams(eta=0.9, gamma=0.05))
    print("spectral capture:", spec.as_dict())
    brute = junta_capture_bruteforce(f1, f2, 0.2, j_max=1)
    print("exhaustive capture (|J| <= 1):", brute.as_dict())

    g = PointFunction(space, np.abs(PointFunction.dictator(space, 3, 2).values - (rng.random(space.size) < 0.02)))
    res = independent_junta_capture(g, 0.05)
    print(f"\nnoisy dictator: J = {res.J}, T' = {res.T_prime}, independent T = {res.T}, loss = {res.loss:.5f}")
    return res


if __name__ == "__main__":
    main()
