"""Swimmer images, matrix text files and PGM image stacks.

Image stacks are stored as matrices with one row-major flattened image per
column and intensities in [0, 1], where 1 is dark.
"""

import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .matcore import as_matrix

__all__ = [
    "SWIMMER_SHAPE",
    "TORSO",
    "LIMB_ANCHORS",
    "LIMB_DIRECTIONS",
    "ImageStack",
    "MatrixFormatError",
    "PgmError",
    "limb_pixels",
    "swimmer_parts",
    "gen_swimmer",
    "save_matrix",
    "load_matrix",
    "read_pgm",
    "write_pgm",
    "load_pgm_stack",
    "mosaic",
    "write_pgm_mosaic",
]

# Canonical swimmer geometry. Changing any of these changes every swimmer
# result in the test suite.
SWIMMER_SHAPE = (20, 11)
TORSO = ((8, 5), (9, 5), (10, 5), (11, 5))
LIMB_NAMES = ("top_left", "top_right", "bottom_left", "bottom_right")
LIMB_ANCHORS = {
    "top_left": (8, 4),
    "top_right": (8, 6),
    "bottom_left": (11, 4),
    "bottom_right": (11, 6),
}
# (row, col) steps: horizontal, diagonal, vertical, steep
LIMB_DIRECTIONS = {
    "top_left": ((0, -1), (-1, -1), (-1, 0), (-2, -1)),
    "top_right": ((0, 1), (-1, 1), (-1, 0), (-2, 1)),
    "bottom_left": ((0, -1), (1, -1), (1, 0), (2, -1)),
    "bottom_right": ((0, 1), (1, 1), (1, 0), (2, 1)),
}
LIMB_LENGTH = 4


class MatrixFormatError(ValueError):
    """Malformed matrix text file."""


class PgmError(ValueError):
    """Unsupported or inconsistent PGM data."""


@dataclass
class ImageStack:
    height: int
    width: int
    matrix: np.ndarray

    @property
    def count(self):
        return self.matrix.shape[1]

    def image(self, j):
        return self.matrix[:, j].reshape(self.height, self.width)


def limb_pixels(limb, position):
    """Pixel coordinates of `limb` in `position` (0..3).

    The first pixel is the joint at the anchor, shared by all four positions.
    """
    r0, c0 = LIMB_ANCHORS[limb]
    dr, dc = LIMB_DIRECTIONS[limb][position]
    return tuple((r0 + t * dr, c0 + t * dc) for t in range(LIMB_LENGTH))


def _flat(pixels):
    return np.array([r * SWIMMER_SHAPE[1] + c for r, c in pixels], dtype=int)


def swimmer_parts():
    """Flattened pixel indices of the torso and of each limb, all positions.

    Returns ``(torso, limbs)`` where ``limbs[name][p]`` indexes position p.
    """
    limbs = {name: [_flat(limb_pixels(name, p)) for p in range(4)] for name in LIMB_NAMES}
    return _flat(TORSO), limbs


def gen_swimmer():
    """The 256 swimmer images (20 x 11 pixels) as a 220 x 256 binary stack.

    Image ``j`` shows limb positions ``(j % 4, j // 4 % 4, j // 16 % 4,
    j // 64)`` for top-left, top-right, bottom-left and bottom-right.
    """
    h, w = SWIMMER_SHAPE
    torso, limbs = swimmer_parts()
    M = np.zeros((h * w, 256))
    for j, pose in enumerate(itertools.product(range(4), repeat=4)):
        pose = pose[::-1]                     # top-left varies fastest
        M[torso, j] = 1.0
        for name, p in zip(LIMB_NAMES, pose):
            M[limbs[name][p], j] = 1.0
    return ImageStack(h, w, M)


def save_matrix(A, path):
    """Write `A` as text: a ``"m n"`` header, then one line per row.

    Values use 17 significant digits so a round trip is exact.
    """
    A = as_matrix(A)
    m, n = A.shape
    lines = [f"{m} {n}"]
    lines.extend(" ".join(format(x, ".17g") for x in row) for row in A)
    Path(path).write_text("\n".join(lines) + "\n")


def load_matrix(path):
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise MatrixFormatError(f"{path}: empty file")
    header = lines[0].split()
    try:
        m, n = (int(tok) for tok in header)
    except ValueError:
        raise MatrixFormatError(f"{path}: malformed header {lines[0]!r}") from None
    if m < 1 or n < 1:
        raise MatrixFormatError(f"{path}: dimensions must be positive")
    if len(lines) - 1 != m:
        raise MatrixFormatError(f"{path}: expected {m} rows, found {len(lines) - 1}")
    A = np.empty((m, n))
    for i, line in enumerate(lines[1:]):
        tokens = line.split()
        if len(tokens) != n:
            raise MatrixFormatError(f"{path}: row {i + 1} has {len(tokens)} entries, expected {n}")
        try:
            A[i] = [float(tok) for tok in tokens]
        except ValueError:
            raise MatrixFormatError(f"{path}: non-numeric entry in row {i + 1}") from None
    return A


def _pgm_tokens(data, count):
    """First `count` header tokens and the offset just past the last one."""
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise PgmError("truncated PGM header")
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    return tokens, pos


def read_pgm(path):
    """Read a P2 or P5 PGM file as an integer array plus its maxval."""
    data = Path(path).read_bytes()
    (magic, width, height, maxval), pos = _pgm_tokens(data, 4)
    if magic not in (b"P2", b"P5"):
        raise PgmError(f"{path}: unsupported magic number {magic!r}")
    width, height, maxval = int(width), int(height), int(maxval)
    if not 0 < maxval < 65536:
        raise PgmError(f"{path}: maxval {maxval} out of range")
    size = width * height
    if magic == b"P2":
        values = np.array(data[pos:].split()[:size], dtype=np.int64)
    else:
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        raw = data[pos + 1:pos + 1 + size * dtype.itemsize]
        values = np.frombuffer(raw, dtype=dtype).astype(np.int64)
    if values.size != size:
        raise PgmError(f"{path}: expected {size} pixels, found {values.size}")
    return values.reshape(height, width), maxval


def write_pgm(path, pixels, maxval=255):
    """Write integer `pixels` (height x width) as an ASCII P2 file."""
    pixels = np.asarray(pixels, dtype=np.int64)
    height, width = pixels.shape
    lines = ["P2", f"{width} {height}", str(maxval)]
    lines.extend(" ".join(str(v) for v in row) for row in pixels)
    Path(path).write_text("\n".join(lines) + "\n")


def load_pgm_stack(directory):
    """Load every ``*.pgm`` in `directory` (sorted by name) as an ImageStack.

    Pixel values are scaled to [0, 1] and inverted, so black becomes 1.
    """
    paths = sorted(Path(directory).glob("*.pgm"))
    if not paths:
        raise PgmError(f"no .pgm files in {directory}")
    columns, shape = [], None
    for p in paths:
        pixels, maxval = read_pgm(p)
        if shape is None:
            shape = pixels.shape
        elif pixels.shape != shape:
            raise PgmError(f"{p}: size {pixels.shape} differs from {shape}")
        columns.append(1.0 - pixels.ravel() / maxval)
    return ImageStack(shape[0], shape[1], np.column_stack(columns))


def mosaic(V, h, w, grid_cols):
    """Tile the columns of V as h x w images on a grid, intensities in [0, 1].

    Each tile is scaled by its own maximum; tiles are separated by 1-pixel
    lines of intensity 0 (white).
    """
    V = as_matrix(V, "V")
    if V.shape[0] != h * w:
        raise ValueError(f"V has {V.shape[0]} rows, expected h*w = {h * w}")
    if grid_cols < 1:
        raise ValueError("grid_cols must be >= 1")
    r = V.shape[1]
    grid_rows = -(-r // grid_cols)
    out = np.zeros((grid_rows * (h + 1) - 1, grid_cols * (w + 1) - 1))
    for k in range(r):
        col = np.maximum(V[:, k], 0.0)
        top = col.max()
        tile = (col / top if top > 0 else col).reshape(h, w)
        i, j = divmod(k, grid_cols)
        out[i * (h + 1):i * (h + 1) + h, j * (w + 1):j * (w + 1) + w] = tile
    return out


def write_pgm_mosaic(V, h, w, grid_cols, path, maxval=255):
    """Render the basis columns of V as a P2 mosaic (dark = high intensity)."""
    tiles = mosaic(V, h, w, grid_cols)
    write_pgm(path, np.rint(maxval * (1.0 - tiles)).astype(np.int64), maxval)
    return tiles.shape
