"""Stiffness estimation from the vibration transient at first contact."""

from ._firstcontact import (
    FORMAT_VERSION,
    FRAME_SIZE,
    SAMPLE_RATE_HZ,
    ConfigError,
    DataError,
    Model,
    crc16_ccitt,
    decode_stream,
    dequantize,
    encode_frame,
    exp_smooth,
    gap_law,
    make_dataset,
    moving_average,
    quantize,
    run_grasp,
    savgol,
    synthesize_grasp,
    train,
)

__all__ = [
    "FORMAT_VERSION",
    "FRAME_SIZE",
    "SAMPLE_RATE_HZ",
    "ConfigError",
    "DataError",
    "Model",
    "crc16_ccitt",
    "decode_stream",
    "dequantize",
    "encode_frame",
    "exp_smooth",
    "gap_law",
    "make_dataset",
    "moving_average",
    "quantize",
    "run_grasp",
    "savgol",
    "synthesize_grasp",
    "train",
]
