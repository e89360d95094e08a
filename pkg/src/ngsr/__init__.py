"""N-Gram sliding-window attention super-resolution engine.

A numpy/scipy implementation of a windowed-attention SR network whose
blocks aggregate context from neighboring local windows (the N-Gram
context), together with a static compute-cost analyzer that reproduces the
architecture's published parameter and Mult-Adds figures, and an image
quality toolkit (MATLAB-compatible bicubic resampling, Y-channel
PSNR/SSIM).
"""

from .analysis import (
    CostReport,
    check_against_published,
    cost_report,
    count_multadds,
    count_params,
    nstb_multadds_estimate,
    wsa_complexity,
)
from .block import (
    NstbParams,
    cosine_similarity,
    nstb_forward,
    relative_position_index,
    scaled_cosine_wsa,
    shift_attention_mask,
)
from .config import ModelConfig, default_config, micro_config
from .metrics import (
    ImageBuffer,
    NormStats,
    bicubic_resize,
    denormalize,
    l1_loss,
    normalize,
    psnr,
    rgb_to_y,
    ssim,
)
from .model import (
    ngswin_forward,
    ngswin_forward_raw,
    patch_merging,
    pooling_cascade,
    reconstruct,
    scdp_bottleneck,
)
from .ngram import (
    NGramParams,
    WindowGrid,
    cyclic_shift,
    cyclic_unshift,
    ngram_context,
    seq_refl_win_pad,
    sliding_wsa,
    unigram_embed,
    window_merge,
    window_partition,
    windowwise_add,
)
from .ops import conv2d, gelu, layer_norm, leaky_relu, pixel_shuffle, pixel_unshuffle, pool2d, softmax_lastdim
from .pngio import read_png, write_png
from .weights import WeightFormatError, WeightStore, init_weights, param_specs

__version__ = "0.1.0"
