"""Greedy matching-like decomposition with an exact independent-set certificate."""
import numpy as np

from removal.chain import ProductSpace, complete_graph_chain
from removal.functions import PointFunction, random_function
from removal.independent import eps_far_from_independent, is_independent, is_matching_like, matching_like_decompose


def main(seed: int = 3):
    space = ProductSpace(complete_graph_chain(3), 3)
    rng = np.random.default_rng(seed)
    g = random_function(space, rng)
    g = PointFunction(space, g.values * (rng.random(space.size) < 0.5))
    res = matching_like_decompose(g)
    check = is_matching_like(res.f)
    print(f"E[g] = {g.mean():.4f}, E[f] = {res.f.mean():.4f}, augmentations = {len(res.augmentation_trace)}")
    print(f"heaviest independent set under f carries {check.worst_mass:.4f} <= E[f]/2 = {res.f.mean() / 2:.4f}")
    print("residual set", res.residual_set, "independent:", is_independent(space, res.residual_set))
    far = eps_far_from_independent(g, 0.1)
    print(f"best independent set captures {far.captured:.4f} of g; 0.1-far: {far.far}")
    return check.ok


if __name__ == "__main__":
    main()
