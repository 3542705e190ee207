"""Random-access loader for bugworld dataset directories."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

FRAME_PATTERN = "frame_%06d.png"
MASK_PATTERN = "mask_%06d.png"


class Dataset:
    """Indexable sequence of (frame, mask, row) triples for one dataset."""

    def __init__(self, root):
        self.root = Path(root)
        self.manifest = json.loads(
            (self.root / "manifest.json").read_text(encoding="utf-8"))
        self._rows = [
            json.loads(line)
            for line in (self.root / "trajectory.jsonl")
            .read_text(encoding="utf-8").splitlines() if line.strip()
        ]
        self._count = int(self.manifest["frame_count"])

    def __len__(self) -> int:
        return self._count

    def __getitem__(self, index: int):
        if index < 0:
            index += self._count
        if not 0 <= index < self._count:
            raise IndexError(index)
        frame = self._load(self.root / "frames" / (FRAME_PATTERN % index))
        mask = self._load(self.root / "masks" / (MASK_PATTERN % index))
        return frame, mask, self._rows[index]

    def __iter__(self):
        for i in range(self._count):
            yield self[i]

    @staticmethod
    def _load(path: Path) -> np.ndarray:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"))


def load_dataset(dataset_dir) -> Dataset:
    return Dataset(dataset_dir)
