"""Run-length mask codec, wire-compatible with the harness.

The text form is "height width c0 c1 c2 ..." with run counts alternating
background/foreground in row-major order, starting with a background run.
Only the first count may be zero.  This is an independent implementation;
a golden-file suite pins it bit-for-bit against the harness codec.

Masks are plain (height, width, bits) triples with `bits` a flat row-major
list of booleans, so the codec has no third-party dependencies.
"""

from __future__ import annotations

Mask = tuple[int, int, list[bool]]


def rle_encode(height: int, width: int, bits: list[bool]) -> str:
    if height < 1 or width < 1:
        raise ValueError(f"bad mask dimensions {height}x{width}")
    if len(bits) != height * width:
        raise ValueError(f"expected {height * width} bits, got {len(bits)}")
    counts: list[int] = []
    current = False
    run = 0
    for bit in bits:
        bit = bool(bit)
        if bit == current:
            run += 1
        else:
            counts.append(run)
            current = bit
            run = 1
    counts.append(run)
    return " ".join([str(height), str(width)] + [str(c) for c in counts])


def rle_decode(text: str) -> Mask:
    tokens = text.split()
    if len(tokens) < 3:
        raise ValueError(f"run-length text too short: {text!r}")
    try:
        numbers = [int(t) for t in tokens]
    except ValueError as exc:
        raise ValueError(f"non-numeric token: {exc}") from None
    height, width, counts = numbers[0], numbers[1], numbers[2:]
    if height < 1 or width < 1:
        raise ValueError(f"bad header {height} {width}")
    if any(c < 0 for c in counts):
        raise ValueError("negative run count")
    if any(c == 0 for c in counts[1:]):
        raise ValueError("zero run count after the first")
    if sum(counts) != height * width:
        raise ValueError(f"counts sum to {sum(counts)}, expected {height * width}")
    bits: list[bool] = []
    value = False
    for count in counts:
        bits.extend([value] * count)
        value = not value
    return height, width, bits
