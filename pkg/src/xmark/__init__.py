"""Multi-bit text watermarking with evergreen green lists and constrained shard counting."""

from .core import (
    DomainError,
    Message,
    MessageBlock,
    ParameterError,
    Scheme,
    TokenStream,
    WatermarkParams,
    bit_accuracy,
    block_index,
    block_to_binary,
    concat_blocks,
    divide_message,
)
from .decoder import (
    Ctmm,
    DecodeMode,
    DecodeReport,
    UndecodableError,
    accumulate,
    calibrate_fp_threshold,
    decode,
    fp_statistic,
    is_watermarked,
    recover,
)
from .encoder import EncodeResult, encode, generate_unwatermarked, perturb_logits, sample_token
from .kperm import ShardAssignment, SplitMix64, evergreen_membership, permute_and_partition, prf_hash
from .toylm import LogitSource, ToyLm, ToyLmParams, toy_logits

__version__ = "0.1.0"
