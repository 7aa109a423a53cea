"""Monte-Carlo engines, planar trees and contour processes."""

from .contour import (
    JumpingContour,
    LabeledContourChain,
    jumping_contour_chain,
    labeled_contour_chain,
)
from .engines import (
    POPULATION_CAP,
    BGWRun,
    CMJRun,
    replicate_rng,
    run_replicates,
    sample_life,
    simulate_bgw,
    simulate_cmj,
    simulate_population,
)
from .trees import (
    ContourPath,
    Individual,
    PlanarTree,
    SpinalDecomposition,
    contour_to_tree,
    descents_from,
    extract_individuals,
    individuals_alive,
    spinal_decompose,
    tree_to_contour,
    tree_to_jumping,
)

__all__ = [
    "POPULATION_CAP",
    "BGWRun",
    "CMJRun",
    "ContourPath",
    "Individual",
    "JumpingContour",
    "LabeledContourChain",
    "PlanarTree",
    "SpinalDecomposition",
    "contour_to_tree",
    "descents_from",
    "extract_individuals",
    "individuals_alive",
    "jumping_contour_chain",
    "labeled_contour_chain",
    "replicate_rng",
    "run_replicates",
    "sample_life",
    "simulate_bgw",
    "simulate_cmj",
    "simulate_population",
    "spinal_decompose",
    "tree_to_contour",
    "tree_to_jumping",
]
