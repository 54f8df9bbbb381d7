"""Nonnegative matrix underapproximation, NMF baselines and exact small-case oracles."""

from .datasets import ImageStack, gen_swimmer, load_matrix, load_pgm_stack, save_matrix, write_pgm_mosaic
from .hals import FactorPair, hals_penalized_sweep, hals_sweep, nmf, refit_on_pattern, scale_initial
from .matcore import SingularTriple, dominant_singular_pair, frobenius_norm, inner_product, matmul
from .metrics import (
    SparsityReport,
    hoyer_sparsity,
    plain_sparsity,
    relative_error,
    report,
    scaled_relative_error,
)
from .nmu import (
    LnmuConfig,
    LnmuResult,
    ResidualStack,
    gnmu,
    lagrangian_value,
    lnmu,
    repair_underapprox,
    rnmu,
    update_multipliers,
)
from .oracle import Biclique, max_edge_biclique, optimal_rank1_nmu_binary
from .snmf import SnmfConfig, SnmfResult, adaptive_snmf

__version__ = "0.1.0"
