"""Python bindings for the vcd video copy detection core."""

from ._core import (  # noqa: F401
    combined_loss,
    cosine,
    decode_descriptors,
    detect_layout,
    edit_score,
    encode_descriptors,
    info_nce,
    info_nce_grad,
    koleo,
    koleo_grad,
    l2_normalize,
    micro_ap,
    random_small_descriptor,
    reference_embed,
    run_losscheck,
    split_video,
    toy_train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
