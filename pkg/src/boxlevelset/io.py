"""Image, box and mask files.

Images: 8-bit grayscale or RGB PNG, and plain PGM (P2 ASCII or P5 binary,
maxval <= 255). Boxes: one ``id x0 y0 x1 y1`` record per line, ``#``
comments allowed. Masks are written as 8-bit PNGs.
"""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np
from PIL import Image

from .core import BoxAnnotation, InvalidArgumentError, PixelGrid

__all__ = [
    "ImageFormatError",
    "BoxFileError",
    "load_image",
    "read_pgm",
    "write_pgm",
    "write_png",
    "load_boxes",
    "save_boxes",
    "save_masks",
    "load_mask",
]

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


class ImageFormatError(ValueError):
    pass


class BoxFileError(ValueError):
    pass


def _pgm_tokens(raw, count, start):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens = []
    pos = start
    while len(tokens) < count:
        if pos >= len(raw):
            raise ImageFormatError("truncated PGM header")
        ch = raw[pos:pos + 1]
        if ch == b"#":
            while pos < len(raw) and raw[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            end = pos
            while end < len(raw) and not raw[end:end + 1].isspace() and raw[end:end + 1] != b"#":
                end += 1
            tokens.append(raw[pos:end])
            pos = end
    return tokens, pos


def read_pgm(path):
    """Decode a P2/P5 PGM into a ``uint8``-range integer array and its maxval."""
    raw = Path(path).read_bytes()
    magic = raw[:2]
    if magic not in (b"P2", b"P5"):
        raise ImageFormatError(f"{path}: not a P2/P5 PGM file")
    (width, height, maxval), pos = _pgm_tokens(raw, 3, 2)
    try:
        width, height, maxval = int(width), int(height), int(maxval)
    except ValueError as exc:
        raise ImageFormatError(f"{path}: malformed PGM header") from exc
    if width < 1 or height < 1:
        raise ImageFormatError(f"{path}: invalid PGM size {width}x{height}")
    if not 0 < maxval <= 255:
        raise ImageFormatError(f"{path}: unsupported PGM maxval {maxval} (8-bit only)")
    count = width * height
    if magic == b"P5":
        # exactly one whitespace byte separates header and raster
        body = raw[pos + 1:pos + 1 + count]
        if len(body) != count:
            raise ImageFormatError(f"{path}: truncated PGM raster")
        values = np.frombuffer(body, dtype=np.uint8).astype(np.int64)
    else:
        try:
            values = np.array([int(t) for t in raw[pos:].split()[:count]], dtype=np.int64)
        except ValueError as exc:
            raise ImageFormatError(f"{path}: non-integer PGM sample") from exc
        if values.size != count:
            raise ImageFormatError(f"{path}: truncated PGM raster")
    if values.max(initial=0) > maxval:
        raise ImageFormatError(f"{path}: sample exceeds maxval {maxval}")
    return values.reshape(height, width), maxval


def write_pgm(path, values, binary=True):
    """Write an 8-bit array as P5 (default) or P2."""
    values = np.asarray(values)
    if values.ndim != 2 or values.min(initial=0) < 0 or values.max(initial=0) > 255:
        raise InvalidArgumentError("PGM data must be a 2-D array with values in [0, 255]")
    height, width = values.shape
    header = f"{'P5' if binary else 'P2'}\n{width} {height}\n255\n".encode()
    with open(path, "wb") as fh:
        fh.write(header)
        if binary:
            fh.write(values.astype(np.uint8).tobytes())
        else:
            for row in values.astype(int):
                fh.write((" ".join(map(str, row)) + "\n").encode())


def _png_header(path):
    """``(bit_depth, color_type)`` from the IHDR chunk."""
    with open(path, "rb") as fh:
        head = fh.read(29)
    if len(head) < 29 or head[12:16] != b"IHDR":
        raise ImageFormatError(f"{path}: corrupt PNG header")
    return head[24], head[25]


def _load_png(path):
    bit_depth, color_type = _png_header(path)
    # palette images may pack indices below 8 bits; Pillow expands them
    if bit_depth != 8 and color_type != 3:
        raise ImageFormatError(f"{path}: unsupported PNG bit depth {bit_depth} (8-bit only)")
    with Image.open(path) as img:
        mode = img.mode
        if mode == "P":
            img = img.convert("RGBA" if "transparency" in img.info else "RGB")
            mode = img.mode
        if mode in ("LA", "RGBA"):
            # alpha is ignored
            img = img.convert(mode[:-1])
            mode = img.mode
        if mode not in ("L", "RGB"):
            raise ImageFormatError(f"{path}: unsupported PNG mode {mode}")
        return np.asarray(img, dtype=np.float64) / 255.0


def load_image(path):
    """Read a PNG or PGM image as a grid of intensities in [0, 1]."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image: {path}")
    with open(path, "rb") as fh:
        head = fh.read(8)
    if head == PNG_SIGNATURE:
        return PixelGrid(_load_png(path))
    if head[:2] in (b"P2", b"P5"):
        values, maxval = read_pgm(path)
        return PixelGrid(values / float(maxval))
    raise ImageFormatError(f"{path}: unsupported image format (PNG or PGM P2/P5 expected)")


def write_png(path, values):
    """Write a 2-D ``uint8``-range array (or ``(H, W, 3)``) as an 8-bit PNG."""
    values = np.asarray(values)
    if values.min(initial=0) < 0 or values.max(initial=0) > 255:
        raise InvalidArgumentError("PNG data must lie in [0, 255]")
    Image.fromarray(values.astype(np.uint8)).save(path, format="PNG")


def load_boxes(path):
    """Parse a box file; see the module docstring for the format."""
    boxes, seen = [], set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            fields = text.split()
            if len(fields) != 5:
                raise BoxFileError(f"{path}:{lineno}: expected 5 integers 'id x0 y0 x1 y1'")
            try:
                numbers = [int(f) for f in fields]
            except ValueError:
                raise BoxFileError(f"{path}:{lineno}: non-integer field in {text!r}") from None
            try:
                box = BoxAnnotation(*numbers)
            except InvalidArgumentError as exc:
                raise BoxFileError(f"{path}:{lineno}: {exc}") from None
            if box.id in seen:
                raise BoxFileError(f"{path}:{lineno}: duplicate id {box.id}")
            seen.add(box.id)
            boxes.append(box)
    return boxes


def save_boxes(path, boxes):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# id x0 y0 x1 y1\n")
        for b in boxes:
            fh.write(f"{b.id} {b.x0} {b.y0} {b.x1} {b.y1}\n")


def load_mask(path):
    """Read a mask PNG/PGM back as a ``uint8`` 0/1 array."""
    grid = load_image(path)
    return (grid.data[:, :, 0] > 0.5).astype(np.uint8)


def _report(result):
    lines = [
        f"instances: {len(result.masks) + len(result.failures)}",
        f"mean_objective: {result.mean_objective:.10g}",
        "",
        "id  final_objective  iterations  initial_objective  min_objective  pixels",
    ]
    for m in result.masks:
        trajectory = m.energy_trajectory
        first = trajectory[0] if trajectory else m.final_objective
        lowest = min(trajectory) if trajectory else m.final_objective
        lines.append(
            f"{m.id}  {m.final_objective:.10g}  {m.iterations_run}  {first:.10g}  "
            f"{lowest:.10g}  {int(m.mask.sum())}"
        )
    for id, message in sorted(result.failures.items()):
        lines.append(f"{id}  FAILED  {message}")
    return "\n".join(lines) + "\n"


def save_masks(result, directory):
    """Write ``mask_<id>.png`` per instance, ``labels.png`` and ``report.txt``.

    ``labels.png`` stores instance ids as pixel values, 8-bit when every id
    is at most 255 and 16-bit otherwise.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if not os.access(directory, os.W_OK):
        raise PermissionError(f"cannot write to {directory}")
    for m in result.masks:
        write_png(directory / f"mask_{m.id}.png", m.mask * 255)
    labels = result.label_map
    if labels.max(initial=0) <= 255:
        write_png(directory / "labels.png", labels)
    else:
        Image.fromarray(labels.astype(np.uint16)).save(directory / "labels.png", format="PNG")
    (directory / "report.txt").write_text(_report(result), encoding="utf-8")
