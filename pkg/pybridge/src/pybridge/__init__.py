"""Reference adapter for the segmentation-harness backend wire protocol.

Speaks newline-delimited JSON over stdin/stdout (protocol version 1) and
ships two handler sets: trivial echo handlers for protocol conformance
testing, and oracle handlers that answer from a dataset manifest's
ground-truth annotations.  Real neural predictors and propagators plug in
as plain callables; see :mod:`pybridge.adapter`.
"""

from pybridge.adapter import PROTOCOL_VERSION, AdapterSession, copy_nearest_propagate, empty_predict
from pybridge.codec import rle_decode, rle_encode

__version__ = "0.1.0"

__all__ = [
    "PROTOCOL_VERSION",
    "AdapterSession",
    "copy_nearest_propagate",
    "empty_predict",
    "rle_decode",
    "rle_encode",
]
