"""Entropy potential and the refinement loop on noisy dictators."""
import numpy as np

from removal.chain import ProductSpace, complete_graph_chain
from removal.functions import PointFunction
from removal.refine import entropy, refinement_loop


def main(seed: int = 0):
    space = ProductSpace(complete_graph_chain(3), 4)
    rng = np.random.default_rng(seed)
    base = PointFunction.dictator(space, 2, 1).values
    f = PointFunction(space, np.abs(base - (rng.random(space.size) < 0.03)))
    print("H(f, I) for growing I:")
    for I in ((), (0,), (2,), (0, 2), (0, 1, 2, 3)):
        print(f"  I = {I!s:<14} H = {entropy(f, I): .5f}")
    trace = refinement_loop(f, r=2)
    print(f"\nrefinement loop: alpha = {trace.alpha:.4f}, step bound {trace.bound}")
    for step in trace.steps:
        print(f"  step {step.step}: I = {step.I}, H = {step.H:.5f}, accepted = {step.accepted}, gain = {step.gain:.5f}")
    print(f"stopped ({trace.stop_reason}) at I = {trace.final_I}, H = {trace.final_H:.5f}")
    return trace


if __name__ == "__main__":
    main()
