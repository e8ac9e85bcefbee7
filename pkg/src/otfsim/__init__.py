"""Discrete-time MIMO OFDM-based OTFS simulation toolkit.

Builds the vectorized end-to-end input-output relationship of an
OFDM-based OTFS transceiver over linear time-varying channels, and
estimates per-realization mutual information and Monte Carlo ergodic
capacity for both the OTFS block route and the per-OFDM-symbol route.
"""

from .capacity import (
    BlockMiResult,
    CapacityResult,
    capacity_sweep,
    ergodic_capacity,
    full_k_matrix,
    mutual_information,
    otfs_block_mi,
    per_symbol_k_matrices,
)
from .channel import (
    ChannelModel,
    LtvChannel,
    NoiseSpec,
    assemble_h_matrix,
    awgn,
    channel_from_json,
    channel_to_json,
    reduce_to_block_channel,
    synthesize,
    trial_rng,
)
from .errors import (
    ConfigError,
    DimensionError,
    OtfsimError,
    SizeCapError,
    StructureError,
)
from .kronops import (
    DENSE_ENTRY_CAP,
    DenseFactor,
    DftFactor,
    DiagonalFactor,
    IdentityFactor,
    InverseDftFactor,
    KronOperator,
    OperatorChain,
    dft_matrix,
    idft_matrix,
    kron,
    mixed_product_holds,
    unvec,
    vec,
    vec_identity_holds,
)
from .mimo import (
    MimoChainResult,
    MimoConfig,
    mimo_block_channel,
    mimo_chain,
    mimo_effective_matrix,
    mimo_effective_operator,
    mimo_isfft,
    mimo_window,
    mimo_window_diagonal,
    split_stacked_vector,
    stack_grids,
)
from .transceiver import (
    CpMatrices,
    OtfsFrameConfig,
    SisoChainResult,
    TwoDConvResult,
    WindowSpec,
    apply_window,
    convolve_2d_circular,
    cp_matrices,
    dd_channel_as_2d_convolution,
    effective_matrix_frequency_domain,
    effective_matrix_general,
    effective_matrix_rectangular,
    effective_matrix_separable,
    effective_operator_general,
    isfft,
    ofdm_demodulate,
    ofdm_modulate,
    receive_basis,
    sfft,
    siso_chain,
    to_frequency_domain,
    transmit_basis,
    window_distortion,
)

__version__ = "0.1.0"
