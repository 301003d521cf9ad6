"""Readers and writers for 1D CSV samples, PGM images and key=value reports."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .grid import Grid, MassVector, discretize, normalize

SPACING_RTOL = 1e-9


class InputError(ValueError):
    """Unreadable or inconsistent input file."""


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_csv_samples(path) -> tuple[np.ndarray, np.ndarray]:
    """Rows ``x,value`` (an optional non-numeric header row is skipped)."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if rows and not all(_is_number(c) for c in rows[0][:2]):
        rows = rows[1:]
    if len(rows) < 2:
        raise InputError(f"{path}: need at least two data rows")
    try:
        data = np.array([[float(r[0]), float(r[1])] for r in rows])
    except (ValueError, IndexError) as exc:
        raise InputError(f"{path}: every row must be 'x,value' ({exc})") from exc
    if not np.all(np.isfinite(data)):
        raise InputError(f"{path}: non-finite entries")
    return data[:, 0], data[:, 1]


def samples_to_mass(x, values, source: str = "input") -> MassVector:
    """Density samples at uniformly spaced ``x`` -> normalized mass vector.

    The sample points are taken as cell centers, so the grid spans
    ``[x0 - h/2, xN + h/2]``.
    """
    x = np.asarray(x, dtype=float)
    dx = np.diff(x)
    if np.any(dx <= 0):
        raise InputError(f"{source}: x must be strictly increasing")
    h = (x[-1] - x[0]) / (x.size - 1)
    if np.max(np.abs(dx - h)) > SPACING_RTOL * h:
        raise InputError(f"{source}: x is not uniformly spaced (max deviation {np.max(np.abs(dx - h)):.3e})")
    grid = Grid.line(x[0] - 0.5 * h, x[-1] + 0.5 * h, x.size)
    try:
        return normalize(discretize(values, grid))
    except ValueError as exc:
        raise InputError(f"{source}: {exc}") from exc


def read_csv_mass(path) -> MassVector:
    x, v = read_csv_samples(path)
    return samples_to_mass(x, v, str(path))


def write_csv(path, header, columns) -> None:
    """Comma-separated table with a header row and 17 significant digits."""
    cols = [np.asarray(c, dtype=float).ravel() for c in columns]
    if len({c.size for c in cols}) > 1:
        raise ValueError("columns differ in length")
    with Path(path).open("w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _pgm_tokens(data: bytes):
    # header tokens with '#' comments stripped; returns (tokens, offset after the last one)
    tokens, i, n = [], 0, len(data)
    while len(tokens) < 4:
        while i < n and data[i:i + 1].isspace():
            i += 1
        if i < n and data[i:i + 1] == b"#":
            while i < n and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < n and not data[j:j + 1].isspace() and data[j:j + 1] != b"#":
            j += 1
        if j == i:
            raise InputError("truncated PGM header")
        tokens.append(data[i:j].decode("ascii"))
        i = j
    return tokens, i


def read_pgm(path) -> np.ndarray:
    """Grayscale PGM (P2 or P5) as a float array of raw intensities, shape ``(rows, cols)``."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        (magic, w, h, maxval), off = _pgm_tokens(data)
        w, h, maxval = int(w), int(h), int(maxval)
    except (InputError, ValueError, UnicodeDecodeError) as exc:
        raise InputError(f"{path}: bad PGM header ({exc})") from exc
    if magic not in ("P2", "P5") or w < 1 or h < 1 or not 0 < maxval < 65536:
        raise InputError(f"{path}: not a grayscale PGM (magic {magic!r}, {w}x{h}, maxval {maxval})")
    if magic == "P5":
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        body = data[off + 1:]
        need = w * h * dtype.itemsize
        if len(body) < need:
            raise InputError(f"{path}: truncated pixel data")
        img = np.frombuffer(body[:need], dtype=dtype)
    else:
        try:
            img = np.array(data[off:].split()[: w * h], dtype=np.int64)
        except ValueError as exc:
            raise InputError(f"{path}: bad P2 pixel data") from exc
        if img.size < w * h:
            raise InputError(f"{path}: truncated pixel data")
    img = img.astype(float).reshape(h, w)
    if np.any(img > maxval):
        raise InputError(f"{path}: pixel above maxval")
    return img


def image_grid(shape) -> Grid:
    """Pixel grid with spacing ``1 / max(rows, cols)`` anchored at the origin."""
    h, w = shape
    s = 1.0 / max(h, w)
    return Grid((0.0, 0.0), (h * s, w * s), (h, w))


def image_to_mass(img, source: str = "image") -> MassVector:
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise InputError(f"{source}: expected a 2D image")
    try:
        return normalize(discretize(img.ravel(), image_grid(img.shape)))
    except ValueError as exc:
        raise InputError(f"{source}: {exc}") from exc


def read_pgm_mass(path) -> MassVector:
    return image_to_mass(read_pgm(path), str(path))


def write_pgm(path, img, maxval: int = 255) -> None:
    """Binary PGM (P5). ``img`` must already hold integers in ``[0, maxval]``."""
    img = np.asarray(img)
    if img.ndim != 2:
        raise ValueError("expected a 2D array")
    if np.any(img < 0) or np.any(img > maxval):
        raise ValueError("pixel values out of range")
    dtype = ">u2" if maxval > 255 else "u1"
    h, w = img.shape
    with Path(path).open("wb") as fh:
        fh.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
        fh.write(np.asarray(img, dtype=dtype).tobytes())


def to_pixels(density: np.ndarray, scale: float) -> np.ndarray:
    """Density -> 0..255 bytes, ``scale`` mapping to 255."""
    return np.clip(np.rint(255.0 * np.asarray(density) / scale), 0, 255).astype(np.uint8)


def _fmt(v) -> str:
    if isinstance(v, bool) or v is None:
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, (list, tuple)):
        return "[" + ",".join(_fmt(x) for x in v) + "]"
    return str(v)


def write_report(path, items: dict) -> None:
    """Plain-text ``key=value`` lines in insertion order."""
    with Path(path).open("w") as fh:
        for k, v in items.items():
            fh.write(f"{k}={_fmt(v)}\n")


def read_report(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k] = v
    return out
