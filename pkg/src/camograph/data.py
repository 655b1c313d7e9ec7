"""Procedural camouflage samples: shared texture, depth-separated objects.

Foreground blobs reuse the exact background texture (near-zero RGB
contrast) but sit at a distinct depth, so segmentation is learnable from
the depth channel and hard from color alone. All generation is
deterministic in the seed.
"""

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import ConfigurationError, InputError

DEPTH_OFFSET = 0.45
RGB_TINT = 0.03


@dataclass
class Sample:
    image: np.ndarray  # H x W x 3 in [0, 1]
    depth: np.ndarray  # H x W in [0, 1]
    mask: np.ndarray   # H x W in {0, 1}
    id: str
    seed: int


def _smooth_noise(rng, size, sigma):
    field = ndimage.gaussian_filter(rng.standard_normal((size, size)), sigma)
    return field / (field.std() + 1e-8)


def _bell(size):
    ax = np.linspace(-1.0, 1.0, size)
    w = np.exp(-(ax ** 2) / 0.32)
    return np.outer(w, w)


def synth_sample(seed: int, size: int = 128, id: str = None) -> Sample:
    if size % 32 != 0 or size <= 0:
        raise ConfigurationError("sample size must be a positive multiple of 32")
    rng = np.random.default_rng(seed)

    # foreground: 1-3 gaussian bumps plus smoothed noise, thresholded at a
    # quantile so the area fraction lands where we want it
    yy, xx = np.mgrid[0:size, 0:size] / size
    bumps = np.zeros((size, size))
    for _ in range(int(rng.integers(1, 4))):
        cy, cx = rng.uniform(0.3, 0.7, 2)
        radius = rng.uniform(0.08, 0.16)
        bumps += np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * radius ** 2))
    field = (bumps + 0.6 * _smooth_noise(rng, size, size / 10)) * _bell(size)
    fraction = rng.uniform(0.08, 0.30)
    mask = (field >= np.quantile(field, 1.0 - fraction)).astype(np.float64)

    # one texture for object and background; the object gets only a tint
    tex = 0.5 + 0.16 * _smooth_noise(rng, size, size / 24) \
        + 0.04 * _smooth_noise(rng, size, size / 6)
    tint = rng.uniform(-RGB_TINT, RGB_TINT, 3)
    image = np.clip(tex[..., None] + mask[..., None] * tint[None, None, :],
                    0.0, 1.0)

    # depth: smooth background ramp, constant offset under the mask
    direction = rng.uniform(0.0, 1.0)
    ramp = 0.1 + 0.35 * (direction * yy + (1.0 - direction) * xx)
    depth = ramp + DEPTH_OFFSET * mask + 0.02 * _smooth_noise(rng, size, size / 16)
    depth = np.clip(depth, 0.0, 1.0)

    return Sample(image=image, depth=depth, mask=mask,
                  id=id if id is not None else "s%06d" % seed, seed=seed)


def _resize(arr, size):
    im = Image.fromarray(arr.astype(np.float32), mode="F")
    return np.asarray(im.resize((size, size), Image.BILINEAR), dtype=np.float64)


def _apply_geometry(arr, quarter, angle, crop):
    out = np.rot90(arr, quarter, axes=(0, 1))
    if angle != 0.0:
        out = ndimage.rotate(out, angle, axes=(0, 1), reshape=False,
                             order=1, mode="reflect")
    if crop is not None:
        top, left, extent = crop
        size = arr.shape[0]
        window = out[top:top + extent, left:left + extent]
        if out.ndim == 3:
            out = np.stack([_resize(window[..., c], size)
                            for c in range(out.shape[2])], axis=-1)
        else:
            out = _resize(window, size)
    return np.ascontiguousarray(out)


def augment(sample: Sample, seed: int) -> Sample:
    """Quarter-turn, small-angle rotation, crop-and-resize, color jitter.

    Geometry is shared by image, depth, and mask; the jitter touches the
    image only. Every stage has a no-op draw, so some seeds leave the
    sample bitwise unchanged.
    """
    rng = np.random.default_rng(seed)
    size = sample.mask.shape[0]
    quarter = int(rng.integers(0, 4))
    angle = float(rng.uniform(-15.0, 15.0)) if rng.random() < 0.5 else 0.0
    crop = None
    if rng.random() < 0.5:
        # scale is the retained area fraction, so the per-object pixel
        # count never grows by more than 1/0.8 under the resize
        scale = rng.uniform(0.8, 1.0)
        extent = max(1, int(round(size * scale ** 0.5)))
        if extent < size:
            top = int(rng.integers(0, size - extent + 1))
            left = int(rng.integers(0, size - extent + 1))
            crop = (top, left, extent)

    image = _apply_geometry(sample.image, quarter, angle, crop)
    depth = _apply_geometry(sample.depth, quarter, angle, crop)
    mask = _apply_geometry(sample.mask, quarter, angle, crop)
    mask = (mask >= 0.5).astype(np.float64)

    if rng.random() < 0.5:
        gain = rng.uniform(0.9, 1.1, 3)
        shift = rng.uniform(-0.05, 0.05, 3)
        image = image * gain[None, None, :] + shift[None, None, :]
    image = np.clip(image, 0.0, 1.0)
    depth = np.clip(depth, 0.0, 1.0)

    return Sample(image=image, depth=depth, mask=mask,
                  id=sample.id, seed=sample.seed)


def write_dataset(samples, root):
    root = Path(root)
    for sub in ("images", "depths", "masks"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    lines = []
    for s in samples:
        img = np.round(s.image * 255.0).astype(np.uint8)
        Image.fromarray(img, mode="RGB").save(root / "images" / (s.id + ".png"))
        dep = np.round(s.depth * 65535.0).astype(np.uint16)
        Image.fromarray(dep).save(root / "depths" / (s.id + ".png"))
        msk = (s.mask * 255.0).astype(np.uint8)
        Image.fromarray(msk, mode="L").save(root / "masks" / (s.id + ".png"))
        lines.append("%s %d" % (s.id, s.seed))
    (root / "manifest.txt").write_text("\n".join(lines) + "\n")


def read_dataset(root):
    root = Path(root)
    manifest = root / "manifest.txt"
    if not manifest.exists():
        raise InputError("no manifest.txt under %s" % root)
    samples = []
    for line in manifest.read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if not re.fullmatch(r"\S+ -?\d+", line):
            raise InputError("bad manifest line: %r" % line)
        sid, seed = line.rsplit(" ", 1)
        image = np.asarray(Image.open(root / "images" / (sid + ".png")),
                           dtype=np.float64) / 255.0
        dep_raw = np.asarray(Image.open(root / "depths" / (sid + ".png")),
                             dtype=np.float64)
        depth = dep_raw / 65535.0
        mask_raw = np.asarray(Image.open(root / "masks" / (sid + ".png")),
                              dtype=np.float64)
        mask = (mask_raw >= 128).astype(np.float64)
        samples.append(Sample(image=image, depth=depth, mask=mask,
                              id=sid, seed=int(seed)))
    return samples


def generate_dataset(out_dir, count, size=128, seed=0):
    samples = [synth_sample(seed + i, size, id="%04d" % i)
               for i in range(count)]
    write_dataset(samples, out_dir)
    return samples
