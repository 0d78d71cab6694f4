"""Removal lemmas for product graphs and Kneser graphs, made executable.

The subpackages build product Markov chains and their edge weights
(:mod:`chain`), functions on ``V^n`` with Fourier tools (:mod:`functions`),
exact independent sets (:mod:`independent`), junta captures (:mod:`junta`),
entropy refinement (:mod:`refine`) and the Kneser transfer (:mod:`kneser`).
"""
from .chain import (
    BaseChain,
    ChainError,
    ChainSpectrum,
    ProductSpace,
    apply_markov,
    complete_graph_chain,
    edge_weight,
    eigendecompose,
    quad_form,
    validate_chain,
)
from .functions import (
    FourierExpansion,
    PointFunction,
    conditional_expectation,
    fourier_expand,
    influence,
    influences,
    noise_operator,
    random_function,
    randomized_booleanize,
    restrict,
)
from .independent import (
    CapExceeded,
    eps_far_from_independent,
    is_independent,
    is_matching_like,
    matching_like_decompose,
    max_weight_independent_set,
    support_graph,
)
from .junta import (
    CaptureFailure,
    CaptureParams,
    JuntaCapture,
    capture,
    independent_junta_capture,
    junta_capture_bruteforce,
    junta_capture_spectral,
    label_density_check,
    noisy_ip_gap,
    one_sided_capture,
)
from .kneser import (
    LayerFunction,
    c_constant,
    disjointness_chain,
    down_ratio,
    edge_cube,
    edge_layer,
    is_intersecting,
    kneser_capture,
    mu_pp,
    up_lift,
)
from .refine import (
    RefinementWitness,
    check_phi_inequality,
    entropy,
    find_refinement,
    phi,
    refinement_loop,
    schedule,
    verify_witness,
)

__version__ = "0.1.0"
