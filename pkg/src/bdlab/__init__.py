"""Causal-set action toolkit.

Exact, sampled, and simulated quantum-counting evaluation of the
Benincasa-Dowker action for finite causal sets, with circuit-level
resource accounting.
"""

from .action import (
    AbundanceVector,
    ActionCoefficients,
    VolumeMatrix,
    abundances,
    bd_action,
    bd_action_from_counts,
    load_coefficients,
    strassen_square,
    volume_histogram,
    volume_matrix,
)
from .causet import (
    CausalSet,
    generate,
    inclusive_volume,
    read_causet,
    topological_order,
    transitive_closure,
    validate_or_close,
    write_causet,
)
from .circuits import (
    Circuit,
    Gate,
    ResourceReport,
    build_data_prep,
    build_oracle,
    data_load_gate,
    incr_decr,
    mcmx,
    mcx_cascade,
    pair_index,
    pair_index_inverse,
    resources,
)
from .counting import (
    ActionEstimate,
    CountingOracle,
    CountingParams,
    GroverModel,
    approx_count,
    approx_count_sqrt,
    estimate_bd_action,
    grover_sample,
)
from .sampling import (
    SampledEstimate,
    SampleResult,
    estimate_sampled,
    resample_counts,
    sample_pairs,
)
from .simulators import (
    BasisState,
    oracle_sign,
    oracle_truth,
    run_reversible,
    run_statevector,
)

__version__ = "0.1.0"
