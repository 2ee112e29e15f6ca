"""Feature backbones turning a preprocessed image into an embedding.

The default "gradient" backbone is a dependency-free descriptor: cellwise
gradient-orientation histograms plus coarse color means, with a constant
bias dimension so no image maps to the zero vector. A torchvision ResNet
is available when its pretrained weights are reachable; every backbone's
output is L2-normalized, which is the only property the engine relies on.
"""

from __future__ import annotations

import numpy as np

GRID = 4
BINS = 8
COLOR_GRID = 2


def gradient_features(pixels: np.ndarray) -> np.ndarray:
    """(H, W, 3) in [0,1] -> unit-norm descriptor of dim GRID^2*BINS +
    COLOR_GRID^2*3 + 1."""
    gray = pixels @ np.array([0.299, 0.587, 0.114])
    gy, gx = np.gradient(gray)
    magnitude = np.hypot(gx, gy)
    orientation = np.mod(np.arctan2(gy, gx), np.pi)  # unsigned orientations
    bin_idx = np.minimum((orientation / np.pi * BINS).astype(int), BINS - 1)

    h, w = gray.shape
    cell_h, cell_w = h // GRID, w // GRID
    hist = np.zeros((GRID, GRID, BINS))
    for r in range(GRID):
        for c in range(GRID):
            sl = (slice(r * cell_h, (r + 1) * cell_h), slice(c * cell_w, (c + 1) * cell_w))
            hist[r, c] = np.bincount(bin_idx[sl].ravel(), weights=magnitude[sl].ravel(), minlength=BINS)

    ch, cw = h // COLOR_GRID, w // COLOR_GRID
    color = np.zeros((COLOR_GRID, COLOR_GRID, 3))
    for r in range(COLOR_GRID):
        for c in range(COLOR_GRID):
            color[r, c] = pixels[r * ch : (r + 1) * ch, c * cw : (c + 1) * cw].mean(axis=(0, 1))

    raw = np.concatenate([hist.ravel(), color.ravel(), [1.0]])
    return raw / np.linalg.norm(raw)


GRADIENT_DIM = GRID * GRID * BINS + COLOR_GRID * COLOR_GRID * 3 + 1


class ResnetBackbone:
    """Penultimate-layer features from a pretrained torchvision ResNet."""

    dim = 512

    def __init__(self):
        try:
            import torch
            import torchvision
        except ImportError as exc:
            raise RuntimeError("torch/torchvision are not installed; use the gradient backbone") from exc
        try:
            weights = torchvision.models.ResNet18_Weights.IMAGENET1K_V1
            model = torchvision.models.resnet18(weights=weights)
        except Exception as exc:  # weight download unavailable offline
            raise RuntimeError(f"pretrained weights unavailable ({exc}); use the gradient backbone") from exc
        model.fc = torch.nn.Identity()
        model.eval()
        self._torch = torch
        self._model = model

    def __call__(self, pixels: np.ndarray) -> np.ndarray:
        torch = self._torch
        mean = np.array([0.485, 0.456, 0.406])
        std = np.array([0.229, 0.224, 0.225])
        x = (pixels - mean) / std
        tensor = torch.from_numpy(np.transpose(x, (2, 0, 1))[None]).float()
        with torch.no_grad():
            out = self._model(tensor).numpy()[0].astype(np.float64)
        return out / np.linalg.norm(out)


def make_backbone(name: str):
    """Returns (callable, output_dim) for a backbone name."""
    if name == "gradient":
        return gradient_features, GRADIENT_DIM
    if name == "resnet18":
        backbone = ResnetBackbone()
        return backbone, backbone.dim
    raise ValueError(f"unknown backbone {name!r}")
