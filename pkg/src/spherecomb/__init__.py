"""Sphere and path averages for matrix groups acting on the torus.

The pipeline: comb a group with a finite graph whose paths enumerate group
elements by word length, extract the growth rate and Perron eigendata of the
transition matrix, weight paths by the induced Markov chain, and average test
functions over spheres of the orbit of a torus point.  Group and torus
arithmetic is exact (arbitrary-precision integers, 64-bit fixed point mod 1);
floats enter only in spectral data and final averages.
"""

from .algebra import (
    FRACTIONAL_BITS,
    GeneratorSystem,
    GroupMatrix,
    TorusPoint,
    phase64,
    sqrt_fix64,
    torus_act,
    word_act,
)
from .combing import (
    Edge,
    GeodesicReport,
    GraphStructure,
    build_cone_type_combing,
    build_free_group_combing,
    cayley_sphere_counts,
    components,
    count_paths,
    enumerate_paths,
    load_automaton,
    loop_paths,
    p_step,
    prune_small_growth,
    restrict,
    save_automaton,
    sphere_counts,
    verify_geodesic,
)
from .equidist import (
    AveragingReport,
    McEstimate,
    TestFunction,
    WeightedAverageResult,
    cesaro_average,
    character_sums,
    haar_integral,
    kappa_average,
    markov_cesaro,
    mc_spherical,
    orbit_tables,
    random_geodesic_average,
    sphere_series,
    spherical_average,
)
from .errors import (
    AutomatonFormatError,
    BudgetExceededError,
    DimensionMismatchError,
    InconsistentAutomatonError,
    NilpotentMatrixError,
    NormalizationError,
    NotAlmostSemisimpleError,
    NotUnimodularError,
    RadiusExhaustedError,
    SmallGrowthVertexError,
    SpherecombError,
    UnknownLabelError,
)
from .markov import (
    ExcursionDecomposition,
    LambdaPrime,
    MarkovModel,
    PrefixDistribution,
    ReturnTimeRecord,
    SampledPath,
    build_markov,
    counting_distribution,
    excursion_decompose,
    lambda_prime,
    path_weight,
    prefix_distribution,
    return_times,
    sample_path,
    sample_vertex_walk,
    tv_distance,
)
from .presets import Preset, preset, preset_names
from .spectral import (
    Classification,
    SpectralData,
    a_infinity,
    classify,
    growth_constants,
    perron_data,
    transition_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "AutomatonFormatError",
    "AveragingReport",
    "BudgetExceededError",
    "Classification",
    "DimensionMismatchError",
    "Edge",
    "ExcursionDecomposition",
    "FRACTIONAL_BITS",
    "GeneratorSystem",
    "GeodesicReport",
    "GraphStructure",
    "GroupMatrix",
    "InconsistentAutomatonError",
    "LambdaPrime",
    "MarkovModel",
    "McEstimate",
    "NilpotentMatrixError",
    "NormalizationError",
    "NotAlmostSemisimpleError",
    "NotUnimodularError",
    "PrefixDistribution",
    "Preset",
    "RadiusExhaustedError",
    "ReturnTimeRecord",
    "SampledPath",
    "SmallGrowthVertexError",
    "SpectralData",
    "SpherecombError",
    "TestFunction",
    "TorusPoint",
    "UnknownLabelError",
    "WeightedAverageResult",
    "a_infinity",
    "build_cone_type_combing",
    "build_free_group_combing",
    "build_markov",
    "cayley_sphere_counts",
    "cesaro_average",
    "character_sums",
    "classify",
    "components",
    "count_paths",
    "counting_distribution",
    "enumerate_paths",
    "excursion_decompose",
    "growth_constants",
    "haar_integral",
    "kappa_average",
    "lambda_prime",
    "load_automaton",
    "loop_paths",
    "markov_cesaro",
    "mc_spherical",
    "orbit_tables",
    "p_step",
    "path_weight",
    "perron_data",
    "phase64",
    "prefix_distribution",
    "preset",
    "preset_names",
    "prune_small_growth",
    "random_geodesic_average",
    "restrict",
    "return_times",
    "sample_path",
    "sample_vertex_walk",
    "save_automaton",
    "sphere_counts",
    "sphere_series",
    "spherical_average",
    "sqrt_fix64",
    "torus_act",
    "transition_matrix",
    "tv_distance",
    "verify_geodesic",
    "word_act",
]
