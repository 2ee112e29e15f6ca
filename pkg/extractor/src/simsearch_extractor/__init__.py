from .cli import discover, extract
from .features import gradient_features, make_backbone
from .preprocess import preprocess

__all__ = ["discover", "extract", "gradient_features", "make_backbone", "preprocess"]
