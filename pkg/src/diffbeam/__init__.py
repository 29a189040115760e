"""Clustered MIMO-OFDM beamforming with differential, Huffman-coded codeword feedback."""
from .beamform import ClusterConfig, eigen_switching_rate, select_all_clusters, select_cluster_codeword, select_indices
from .channel import (
    HIGH_ADJACENT_CORR,
    LOW_ADJACENT_CORR,
    ChannelTensor,
    CorrelationSpec,
    build_freq_correlation,
    build_full_correlation,
    channel_factor,
    empirical_correlation,
    exponential_pdp_correlation,
    macrocell_spatial_correlation,
    sample_channel,
    sample_channels,
    stream,
)
from .codebook import (
    Codebook,
    TransitionTable,
    build_transition_table,
    check_property1,
    cyclic_codebook,
    generate_glp_codebook,
    load_codebook,
    min_distance,
    save_codebook,
)
from .errors import ConfigError, DiffbeamError, DomainError, FramingError, LoadError, NumericError, ResourceError
from .feedback import (
    PER_INDEX,
    POOLED,
    CodecSession,
    FeedbackMessage,
    HuffmanCode,
    ProbabilityModel,
    SymbolVector,
    differential_decode_indices,
    differential_encode_indices,
    entropy_bits,
    huffman_build,
)
from .harness import (
    ExperimentConfig,
    ExperimentReport,
    Scenario,
    convergence_curve,
    emit_outputs,
    load_config,
    run_experiment,
)
from .numerics import dominant_right_singular_vector, hermitian_eig, kron, psd_factor

__version__ = "0.1.0"
