"""Classical-to-quantum feature and image embeddings, with exact decoders.

The image encoders build their states by direct amplitude assignment
rather than by compiling multi-controlled rotations; gate-level
synthesis of these representations is out of scope. The decoders exist
as verification oracles for round-trip tests and the demo command.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sim import Circuit, StateVector, rx, ry

GRAY_LEVELS = 256  # 8-bit grayscale; intensity 0 is black, 255 white


@dataclass(frozen=True)
class GrayImage:
    """Square grayscale image with power-of-two side, row-major pixels.

    Pixel index i doubles as the position-register value of the image
    encoders, so pixels are kept flat.
    """

    side: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.side < 2 or self.side & (self.side - 1):
            raise ValueError(f"side must be a power of two >= 2, got {self.side}")
        px = np.asarray(self.pixels)
        if px.shape != (self.side**2,):
            raise ValueError(
                f"expected {self.side**2} pixels for side {self.side}, "
                f"got shape {px.shape}"
            )
        if not np.issubdtype(px.dtype, np.integer):
            raise ValueError("pixel intensities must be integers")
        if px.min() < 0 or px.max() >= GRAY_LEVELS:
            raise ValueError("pixel intensities must lie in [0, 255]")
        px = px.astype(np.int64)
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @classmethod
    def from_array(cls, arr) -> "GrayImage":
        arr = np.asarray(arr)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"expected a square 2-D array, got shape {arr.shape}")
        return cls(arr.shape[0], arr.reshape(-1))

    @property
    def n(self) -> int:
        """Position-register half-width: the image is 2^n x 2^n."""
        return self.side.bit_length() - 1

    def as_array(self) -> np.ndarray:
        return self.pixels.reshape(self.side, self.side)


def _check_features(features) -> np.ndarray:
    vals = np.asarray(features, dtype=float)
    if vals.ndim != 1 or vals.shape[0] < 1:
        raise ValueError(f"features must be a non-empty 1-D vector, got shape {vals.shape}")
    if not np.all(np.isfinite(vals)):
        raise ValueError("features must be finite")
    return vals


def angle_embed(features, n_qubits: int, axis: str = "y") -> Circuit:
    """One constant rotation per qubit; feature i is the angle on qubit i."""
    vals = _check_features(features)
    if vals.shape[0] != n_qubits:
        raise ValueError(f"need {n_qubits} features for {n_qubits} qubits, got {vals.shape[0]}")
    if axis not in ("x", "y"):
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    gate = rx if axis == "x" else ry
    ops = tuple(gate(q, float(vals[q])) for q in range(n_qubits))
    return Circuit(n_qubits, ops)


def dense_angle_embed(features, n_qubits: int) -> Circuit:
    """Two features per qubit: RX(features[2i]) then RY(features[2i+1])."""
    vals = _check_features(features)
    if vals.shape[0] != 2 * n_qubits:
        raise ValueError(
            f"need {2 * n_qubits} features for {n_qubits} qubits, got {vals.shape[0]}"
        )
    ops = []
    for q in range(n_qubits):
        ops.append(rx(q, float(vals[2 * q])))
        ops.append(ry(q, float(vals[2 * q + 1])))
    return Circuit(n_qubits, tuple(ops))


def amplitude_embed(features) -> StateVector:
    """Write the feature vector into state amplitudes.

    The vector is zero-padded to the next power of two and then
    L2-normalized (pad-then-normalize never changes relative weights),
    so 512 features land on exactly 9 qubits.
    """
    vals = _check_features(features)
    norm = float(np.linalg.norm(vals))
    if norm == 0.0:
        raise ValueError("cannot amplitude-embed an all-zero vector")
    n_qubits = max(1, int(math.ceil(math.log2(vals.shape[0]))))
    padded = np.zeros(2**n_qubits, dtype=complex)
    padded[: vals.shape[0]] = vals
    return StateVector(n_qubits, padded / norm)


def pixel_angles(image: GrayImage) -> np.ndarray:
    """Linear grayscale-to-angle map: 0 -> 0 (black), 255 -> pi/2 (white)."""
    return image.pixels / (GRAY_LEVELS - 1) * (math.pi / 2)


def frqi_encode(image: GrayImage) -> StateVector:
    """Color-qubit image state on 2n+1 qubits.

    Qubit 0 is the color qubit; the remaining 2n qubits hold the pixel
    position. Amplitudes are cos(theta_i)/2^n on the color-0 branch and
    sin(theta_i)/2^n on the color-1 branch of position i.
    """
    n = image.n
    thetas = pixel_angles(image)
    scale = 1.0 / 2**n
    amps = np.concatenate([np.cos(thetas), np.sin(thetas)]) * scale
    return StateVector(2 * n + 1, amps.astype(complex))


def frqi_decode(state: StateVector, n: int) -> np.ndarray:
    """Recover the per-pixel angles theta_i in [0, pi/2] from an FRQI state."""
    if state.n_qubits != 2 * n + 1:
        raise ValueError(f"expected {2 * n + 1} qubits for n={n}, got {state.n_qubits}")
    n_pos = 4**n
    p = np.abs(state.amplitudes) ** 2
    p0, p1 = p[:n_pos], p[n_pos:]
    total = p0 + p1
    if total.min() <= 0.0:
        bad = int(np.argmin(total))
        raise ValueError(f"position {bad} has zero probability; not an FRQI state")
    return np.arctan2(np.sqrt(p1), np.sqrt(p0))


def neqr_encode(image: GrayImage, color_bits: int = 8) -> StateVector:
    """Bitwise image state: intensity f(i) stored in a color register.

    Uses color_bits + 2n qubits; the nonzero amplitudes all equal 1/2^n
    and sit at basis index (f(i) << 2n) | i.
    """
    if color_bits < 1:
        raise ValueError("color_bits must be >= 1")
    if int(image.pixels.max()) >= 2**color_bits:
        raise ValueError(
            f"intensity {int(image.pixels.max())} does not fit in {color_bits} color bits"
        )
    n = image.n
    n_pos = 4**n
    amps = np.zeros(2**color_bits * n_pos, dtype=complex)
    positions = np.arange(n_pos, dtype=np.int64)
    amps[(image.pixels << (2 * n)) | positions] = 1.0 / 2**n
    return StateVector(color_bits + 2 * n, amps)


def neqr_decode(state: StateVector, n: int, color_bits: int = 8) -> GrayImage:
    """Exact pixel recovery from a NEQR state."""
    if state.n_qubits != color_bits + 2 * n:
        raise ValueError(
            f"expected {color_bits + 2 * n} qubits for n={n}, "
            f"color_bits={color_bits}, got {state.n_qubits}"
        )
    n_pos = 4**n
    # column i = amplitudes of position i across all color values
    table = np.abs(state.amplitudes.reshape(2**color_bits, n_pos))
    nonzero = table > 0.5 / 2**n
    per_pos = nonzero.sum(axis=0)
    if np.any(per_pos != 1):
        bad = int(np.flatnonzero(per_pos != 1)[0])
        raise ValueError(
            f"position {bad} has {int(per_pos[bad])} color branches; not a NEQR state"
        )
    pixels = nonzero.argmax(axis=0)
    side = 2**n
    return GrayImage(side, pixels.astype(np.int64))


# --- PGM input for the demo command ------------------------------------

def _tokens(data: bytes):
    """Yield whitespace-separated PGM header/ASCII tokens, skipping comments."""
    i = 0
    while i < len(data):
        c = data[i : i + 1]
        if c.isspace():
            i += 1
        elif c == b"#":
            while i < len(data) and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
        else:
            j = i
            while j < len(data) and not data[j : j + 1].isspace():
                j += 1
            yield data[i:j], j
            i = j


def read_pgm(path) -> GrayImage:
    """Read a P2 (ASCII) or P5 (binary) PGM file as a GrayImage.

    Non-power-of-two images are center-cropped to the largest
    power-of-two square; intensities are rescaled to [0, 255] when the
    file's maxval differs.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    toks = _tokens(data)
    try:
        magic, _ = next(toks)
        if magic not in (b"P2", b"P5"):
            raise ValueError(f"not a P2/P5 PGM file: magic {magic!r}")
        width, _ = next(toks)
        height, _ = next(toks)
        maxval, end = next(toks)
        width, height, maxval = int(width), int(height), int(maxval)
    except StopIteration:
        raise ValueError("truncated PGM header") from None
    if not (0 < maxval < 65536):
        raise ValueError(f"bad PGM maxval {maxval}")
    count = width * height
    if magic == b"P5":
        if maxval > 255:
            raise ValueError("16-bit binary PGM is not supported")
        raw = data[end + 1 : end + 1 + count]
        if len(raw) != count:
            raise ValueError("truncated PGM pixel data")
        pixels = np.frombuffer(raw, dtype=np.uint8).astype(np.int64)
    else:
        vals = [int(t) for t, _ in toks]
        if len(vals) != count:
            raise ValueError(f"expected {count} pixel values, got {len(vals)}")
        pixels = np.array(vals, dtype=np.int64)
    if pixels.min() < 0 or pixels.max() > maxval:
        raise ValueError("pixel value outside [0, maxval]")
    if maxval != 255:
        pixels = np.rint(pixels * (255.0 / maxval)).astype(np.int64)
    return center_crop_pow2(pixels.reshape(height, width))


def center_crop_pow2(arr: np.ndarray) -> GrayImage:
    """Center-crop a 2-D intensity array to the largest power-of-two square."""
    height, width = arr.shape
    side = min(height, width)
    if side < 2:
        raise ValueError(f"image {height}x{width} too small to crop to a 2x2 square")
    side = 1 << (side.bit_length() - 1)
    top = (height - side) // 2
    left = (width - side) // 2
    return GrayImage.from_array(arr[top : top + side, left : left + side])


def write_pgm(path, image: GrayImage):
    """Write an ASCII (P2) PGM file."""
    rows = image.as_array()
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"P2\n{image.side} {image.side}\n255\n")
        for row in rows:
            fh.write(" ".join(str(int(v)) for v in row) + "\n")
