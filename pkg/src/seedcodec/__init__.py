"""Compress weight tensors into LFSR seeds plus 4-bit shared-exponent coefficients."""

from seedcodec.blocks import CompressedBlock, CompressedTensor, QuantizedCoefficients
from seedcodec.codec import (
    PseudoInverseCache,
    ReconstructionStats,
    build_pinv_cache,
    compress_block,
    compress_tensor,
    decompress_tensor,
    dequantize,
    quantize_coefficients,
    reconstruct_block,
)
from seedcodec.config import BlockConfig
from seedcodec.container import decode, encode, read_plain_tensor, write_plain_tensor
from seedcodec.lfsr import (
    CycleCache,
    LfsrSpec,
    build_cycle_cache,
    next_state,
    normalized_matrix,
    raw_matrix,
    standard_cache,
)

__version__ = "0.1.0"
