"""Extract embeddings from an image directory into an EMB1 file.

Class subfolders become labels (0..C-1 by sorted folder name); images
directly in the root get no label. Ids follow sorted paths, so output is
deterministic regardless of filesystem order.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np
from PIL import UnidentifiedImageError

from .emb1io import write_emb1
from .features import make_backbone
from .preprocess import CROP_TO, RESIZE_TO, load_rgb, preprocess

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".webp", ".ppm", ".tiff"}


def discover(image_dir: Path) -> list[tuple[Path, int | None]]:
    """Sorted (path, label) pairs; labels from sorted class subfolders."""
    root_images = sorted(p for p in image_dir.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)
    subdirs = sorted(p for p in image_dir.iterdir() if p.is_dir())
    pairs: list[tuple[Path, int | None]] = [(p, None) for p in root_images]
    for label, sub in enumerate(subdirs):
        pairs.extend(
            (p, label) for p in sorted(sub.iterdir()) if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
        )
    return pairs


def extract(
    image_dir,
    out_path,
    resize_to: int = RESIZE_TO,
    crop_to: int = CROP_TO,
    augment: bool = False,
    backbone: str = "gradient",
    seed: int = 0,
    timestamp: int | None = None,
) -> tuple[int, int]:
    """Returns (written, skipped)."""
    image_dir = Path(image_dir)
    if not image_dir.is_dir():
        raise FileNotFoundError(f"not a directory: {image_dir}")
    embed, dim = make_backbone(backbone)
    rng = np.random.default_rng(seed)
    ts = int(time.time()) if timestamp is None else int(timestamp)
    records = []
    skipped = 0
    for item_id, (path, label) in enumerate(discover(image_dir)):
        try:
            img = load_rgb(path)
        except (OSError, UnidentifiedImageError) as exc:
            print(f"warning: skipping unreadable image {path}: {exc}", file=sys.stderr)
            skipped += 1
            continue
        pixels = preprocess(img, resize_to=resize_to, crop_to=crop_to, augment=augment, rng=rng)
        records.append((item_id, embed(pixels), label, ts))
    write_emb1(out_path, records, dim=dim)
    return len(records), skipped


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="simsearch-extract", description=__doc__)
    parser.add_argument("--images", required=True, help="image directory (class subfolders optional)")
    parser.add_argument("--out", required=True, help="output EMB1 path")
    parser.add_argument("--resize", type=int, default=RESIZE_TO)
    parser.add_argument("--crop", type=int, default=CROP_TO)
    parser.add_argument("--augment", action="store_true")
    parser.add_argument("--backbone", default="gradient", choices=("gradient", "resnet18"))
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--ts", type=int, default=None, help="fixed timestamp for reproducible output")
    args = parser.parse_args(argv)
    try:
        written, skipped = extract(
            args.images,
            args.out,
            resize_to=args.resize,
            crop_to=args.crop,
            augment=args.augment,
            backbone=args.backbone,
            seed=args.seed,
            timestamp=args.ts,
        )
    except (FileNotFoundError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {written} embeddings to {args.out} ({skipped} skipped)", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
