"""Log-concave densities, rearrangement, majorization and Rényi entropy increments."""

from .convolve import ConvolutionClosure, FitResult, SupNorm, conv_eval, conv_sup_norm, fit_density
from .density import (
    LogConcaveDensity,
    build_density,
    exponential,
    exponential_match,
    laplace,
    load_density,
    random_logconcave,
    save_density,
    uniform,
)
from .discrete import LogConcavePMF, discrete_convolve, geometric, geometric_self_conv
from .entropy import RenyiOrder, renyi, renyi_discrete
from .majorize import majorizes
from .rearrange import decreasing_rearrangement, level_measure
from .search import SearchConfig, SearchResult, maximize_increment
from .transport import TransportMap, transport_map
from .verify import VerificationReport

__all__ = [
    "ConvolutionClosure", "FitResult", "SupNorm", "conv_eval", "conv_sup_norm", "fit_density",
    "LogConcaveDensity", "build_density", "exponential", "exponential_match", "laplace",
    "load_density", "random_logconcave", "save_density", "uniform",
    "LogConcavePMF", "discrete_convolve", "geometric", "geometric_self_conv",
    "RenyiOrder", "renyi", "renyi_discrete", "majorizes",
    "decreasing_rearrangement", "level_measure",
    "SearchConfig", "SearchResult", "maximize_increment",
    "TransportMap", "transport_map", "VerificationReport",
]
