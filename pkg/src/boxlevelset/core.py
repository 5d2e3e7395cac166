"""Shared grid, field, annotation and configuration types.

All arrays are row-major numpy arrays indexed ``(row, col[, channel])``.
Boxes are half-open pixel rectangles ``[x0, x1) x [y0, y1)``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "InvalidArgumentError",
    "NumericalFailure",
    "PixelGrid",
    "BoxAnnotation",
    "LevelSetField",
    "EvolutionConfig",
    "InstanceMask",
    "INIT_MODES",
    "make_grid",
    "crop",
    "full_box",
]

INIT_MODES = ("signed_distance", "centered_rect", "checkerboard")
MIN_BOX_AREA = 4


class InvalidArgumentError(ValueError):
    pass


class NumericalFailure(ArithmeticError):
    """Raised when an evolution step produces non-finite values."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


def _frozen(array):
    array = np.array(array, dtype=np.float64, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class PixelGrid:
    """Dense ``H x W x C`` field of finite scalars.

    ``data`` may be given as ``(H, W)`` for a single channel; it is stored
    as a read-only ``(H, W, C)`` float64 array.
    """

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 2:
            data = data[:, :, None]
        if data.ndim != 3:
            raise InvalidArgumentError(f"grid must be 2-D or 3-D, got shape {data.shape}")
        if min(data.shape) < 1:
            raise InvalidArgumentError(f"grid dimensions must be >= 1, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise InvalidArgumentError("grid contains non-finite values")
        object.__setattr__(self, "data", _frozen(data))

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def channels(self):
        return self.data.shape[2]

    @property
    def shape(self):
        return self.data.shape

    def channel(self, k):
        return self.data[:, :, k]

    def __eq__(self, other):
        if not isinstance(other, PixelGrid):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    def __repr__(self):
        return f"PixelGrid(height={self.height}, width={self.width}, channels={self.channels})"


@dataclass(frozen=True)
class BoxAnnotation:
    """Axis-aligned instance box, ``x1``/``y1`` exclusive."""

    id: int
    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        for name in ("id", "x0", "y0", "x1", "y1"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise InvalidArgumentError(f"box {name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.x0 < 0 or self.y0 < 0:
            raise InvalidArgumentError(f"box {self.id}: negative origin ({self.x0}, {self.y0})")
        if self.x0 >= self.x1:
            raise InvalidArgumentError(f"box {self.id}: x0 >= x1 ({self.x0} >= {self.x1})")
        if self.y0 >= self.y1:
            raise InvalidArgumentError(f"box {self.id}: y0 >= y1 ({self.y0} >= {self.y1})")
        if self.area < MIN_BOX_AREA:
            raise InvalidArgumentError(
                f"box {self.id}: area {self.area} below minimum of {MIN_BOX_AREA} pixels"
            )

    @property
    def width(self):
        return self.x1 - self.x0

    @property
    def height(self):
        return self.y1 - self.y0

    @property
    def area(self):
        return self.width * self.height

    @property
    def slices(self):
        return slice(self.y0, self.y1), slice(self.x0, self.x1)

    def fits(self, height, width):
        return self.x1 <= width and self.y1 <= height


def full_box(height, width, id=0):
    return BoxAnnotation(id, 0, 0, width, height)


@dataclass(eq=False)
class LevelSetField:
    """Level-set values over the interior of ``box``, shape ``(box.height, box.width)``.

    ``phi`` is the only mutable state in the package; it belongs to a single
    evolution loop at a time.
    """

    box: BoxAnnotation
    phi: np.ndarray

    def __post_init__(self):
        phi = np.array(self.phi, dtype=np.float64)
        if phi.shape != (self.box.height, self.box.width):
            raise InvalidArgumentError(
                f"phi shape {phi.shape} does not match box {self.box.height}x{self.box.width}"
            )
        if not np.all(np.isfinite(phi)):
            raise InvalidArgumentError("phi contains non-finite values")
        self.phi = phi

    def copy(self):
        return LevelSetField(self.box, self.phi.copy())


@dataclass(frozen=True)
class EvolutionConfig:
    """Solver hyperparameters.

    ``gamma`` and ``alpha`` default to the values used for box-supervised
    training (1e-4 and 3.0). ``restrict_to_box=False`` evolves over the whole
    image instead of the annotation box and exists only for ablation tests.
    """

    gamma: float = 1e-4
    lambda1: float = 1.0
    lambda2: float = 1.0
    alpha: float = 3.0
    delta_t: float = 0.5
    max_iters: int = 500
    rel_tol: float = 1e-6
    patience: int = 10
    eps_curv: float = 1e-8
    eps_dice: float = 1e-6
    feature_sigma: float = 0.1
    init_mode: str = "signed_distance"
    init_scale: float = 1.0
    restrict_to_box: bool = True

    def __post_init__(self):
        nonneg = ("gamma", "lambda1", "lambda2", "alpha")
        positive = ("delta_t", "rel_tol", "eps_curv", "eps_dice", "feature_sigma")
        for name in nonneg + positive + ("init_scale",):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise InvalidArgumentError(f"{name} must be finite, got {value}")
        for name in nonneg:
            if getattr(self, name) < 0:
                raise InvalidArgumentError(f"{name} must be >= 0, got {getattr(self, name)}")
        for name in positive:
            if getattr(self, name) <= 0:
                raise InvalidArgumentError(f"{name} must be > 0, got {getattr(self, name)}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise InvalidArgumentError(f"max_iters must be an integer >= 1, got {self.max_iters}")
        if int(self.patience) != self.patience or self.patience < 1:
            raise InvalidArgumentError(f"patience must be an integer >= 1, got {self.patience}")
        if self.init_mode not in INIT_MODES:
            raise InvalidArgumentError(
                f"init_mode must be one of {INIT_MODES}, got {self.init_mode!r}"
            )
        if not 0 < self.init_scale <= 1:
            raise InvalidArgumentError(f"init_scale must be in (0, 1], got {self.init_scale}")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dict(cls, values):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise InvalidArgumentError(f"unknown config keys: {sorted(unknown)}")
        return cls(**values)

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclass(eq=False)
class InstanceMask:
    """Binary full-image mask for one annotated instance.

    ``probability`` holds the final sigmoid of the level set in the full-image
    frame (zero outside the evolution frame); it drives overlap resolution.
    ``level_set`` is the final level set over its evolution frame.
    """

    id: int
    mask: np.ndarray
    energy_trajectory: list = field(default_factory=list)
    iterations_run: int = 0
    probability: np.ndarray | None = None
    final_objective: float = float("nan")
    level_set: LevelSetField | None = None

    def __post_init__(self):
        mask = np.asarray(self.mask)
        if mask.ndim != 2:
            raise InvalidArgumentError(f"mask must be 2-D, got shape {mask.shape}")
        if not np.all((mask == 0) | (mask == 1)):
            raise InvalidArgumentError("mask values must be 0 or 1")
        self.mask = mask.astype(np.uint8)
        self.energy_trajectory = [float(e) for e in self.energy_trajectory]
        if len(self.energy_trajectory) != self.iterations_run:
            raise InvalidArgumentError(
                f"trajectory length {len(self.energy_trajectory)} != iterations_run "
                f"{self.iterations_run}"
            )


def make_grid(height, width, channels, fill):
    """Constant grid of the given shape."""
    if min(height, width, channels) < 1:
        raise InvalidArgumentError(
            f"grid dimensions must be >= 1, got ({height}, {width}, {channels})"
        )
    if not np.isfinite(fill):
        raise InvalidArgumentError(f"fill value must be finite, got {fill}")
    return PixelGrid(np.full((height, width, channels), float(fill)))


def crop(grid, box):
    """Copy of ``grid`` restricted to ``box``."""
    if not box.fits(grid.height, grid.width):
        raise InvalidArgumentError(
            f"box {box.id} ({box.x0},{box.y0},{box.x1},{box.y1}) exceeds "
            f"{grid.height}x{grid.width} grid"
        )
    rows, cols = box.slices
    return PixelGrid(grid.data[rows, cols, :])
