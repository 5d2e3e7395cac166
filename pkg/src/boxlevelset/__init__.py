"""Box-supervised instance segmentation by sigmoid Chan-Vese level-set evolution."""
from .core import (
    BoxAnnotation,
    EvolutionConfig,
    InstanceMask,
    InvalidArgumentError,
    LevelSetField,
    NumericalFailure,
    PixelGrid,
    crop,
    make_grid,
)
from .evolution import evolve, initialize_phi
from .features import build_feature_stack, normalize_image
from .io import load_boxes, load_image, save_masks
from .pipeline import SegmentationResult, segment_image
from .scenes import SceneSpec, Shape, evaluate_iou, generate_scene

__version__ = "0.1.0"

__all__ = [
    "BoxAnnotation",
    "EvolutionConfig",
    "InstanceMask",
    "InvalidArgumentError",
    "LevelSetField",
    "NumericalFailure",
    "PixelGrid",
    "SceneSpec",
    "SegmentationResult",
    "Shape",
    "build_feature_stack",
    "crop",
    "evaluate_iou",
    "evolve",
    "generate_scene",
    "initialize_phi",
    "load_boxes",
    "load_image",
    "make_grid",
    "normalize_image",
    "save_masks",
    "segment_image",
]
