#!/usr/bin/env python3
# Copyright 2026 The NIC Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Builds the toy dataset from the sample images bundled with scikit-image
and scikit-learn.

Output layout:
  <out>/train/  128 crops of 96x96 from the training sources
  <out>/val/    8 crops of 64x64 from the training sources
  <out>/test/   10 crops (64..128 px) from sources never used for training
"""

import argparse
import pathlib

import numpy as np
from PIL import Image
import skimage.data
import sklearn.datasets

TRAIN_SOURCES = [
    "astronaut", "coffee", "hubble_deep_field", "immunohistochemistry", "retina",
    "colorwheel", "camera", "moon", "coins", "grass", "gravel", "brick", "page",
]
TEST_SOURCES = ["chelsea", "rocket", "flower"]


def load(name):
    if name in ("china", "flower"):
        imgs = sklearn.datasets.load_sample_images()
        names = [pathlib.Path(f).stem for f in imgs.filenames]
        arr = imgs.images[names.index(name)]
    else:
        arr = getattr(skimage.data, name)()
    arr = np.asarray(arr)
    if arr.dtype == bool:
        arr = arr.astype(np.uint8) * 255
    if arr.ndim == 2:
        arr = np.stack([arr] * 3, axis=-1)
    arr = arr[..., :3].astype(np.uint8)
    img = Image.fromarray(arr)
    # Halving with a box filter gives denser detail per crop and less noise.
    if min(img.size) >= 256:
        img = img.resize((img.size[0] // 2, img.size[1] // 2), Image.BOX)
    return np.asarray(img)


def crops(arr, size, count, rng):
    h, w, _ = arr.shape
    out = []
    for _ in range(count):
        y = int(rng.integers(0, h - size[0] + 1))
        x = int(rng.integers(0, w - size[1] + 1))
        out.append(arr[y:y + size[0], x:x + size[1]])
    return out


def save(images, directory, prefix):
    directory.mkdir(parents=True, exist_ok=True)
    for i, im in enumerate(images):
        Image.fromarray(im).save(directory / f"{prefix}{i:03d}.png", optimize=True)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/toy")
    parser.add_argument("--seed", type=int, default=2026)
    args = parser.parse_args()
    rng = np.random.default_rng(args.seed)
    out = pathlib.Path(args.out)

    sources = [load(n) for n in TRAIN_SOURCES]
    train, val = [], []
    for i in range(128):
        train += crops(sources[i % len(sources)], (96, 96), 1, rng)
    for i in range(8):
        val += crops(sources[(3 * i + 1) % len(sources)], (64, 64), 1, rng)
    save(train, out / "train", "train_")
    save(val, out / "val", "val_")

    test_sizes = [(128, 128)] * 6 + [(96, 128), (128, 96), (64, 64), (80, 112)]
    test = []
    held_out = [load(n) for n in TEST_SOURCES]
    for i, size in enumerate(test_sizes):
        test += crops(held_out[i % len(held_out)], size, 1, rng)
    save(test, out / "test", "test_")


if __name__ == "__main__":
    main()
