"""Label-preserving image transformation families.

Three families are built in: low-pass texture filtering in the frequency
domain, clockwise rotation, and pixel-intensity contrast maps.  Each family
is an ordered list whose first member is the identity, plus two designated
"vertex" members used as the extremes during training.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ShapeError
from .tensor import _dft_matrix


@dataclass(frozen=True)
class Identity:
    def name(self) -> str:
        return "identity"


@dataclass(frozen=True)
class FreqCutoff:
    """Keep only spectrum entries within ``radius`` of the DC centroid."""

    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"radius must be positive, got {self.radius}")

    def name(self) -> str:
        return f"freq:{_fmt(self.radius)}"


@dataclass(frozen=True)
class Rotate:
    """Rotate clockwise about the image center; bilinear, zero fill."""

    degrees: float

    def __post_init__(self):
        if not 0.0 <= self.degrees < 360.0:
            raise ValueError(f"degrees must lie in [0, 360), got {self.degrees}")

    def name(self) -> str:
        return f"rot:{_fmt(self.degrees)}"


@dataclass(frozen=True)
class PixelMap:
    """x -> scale * x, or scale * (1 - x) when negated."""

    scale: float
    negate: bool

    def __post_init__(self):
        if not 0.0 < self.scale <= 1.0:
            raise ValueError(f"scale must lie in (0, 1], got {self.scale}")

    def name(self) -> str:
        return f"pix:{_fmt(self.scale)}:{int(self.negate)}"


Transform = Identity | FreqCutoff | Rotate | PixelMap


def _fmt(x: float) -> str:
    return f"{x:g}"


def parse_transform(text: str) -> Transform:
    """Inverse of Transform.name()."""
    parts = text.split(":")
    if parts[0] == "identity" and len(parts) == 1:
        return Identity()
    if parts[0] == "freq" and len(parts) == 2:
        return FreqCutoff(float(parts[1]))
    if parts[0] == "rot" and len(parts) == 2:
        return Rotate(float(parts[1]))
    if parts[0] == "pix" and len(parts) == 3:
        return PixelMap(float(parts[1]), bool(int(parts[2])))
    raise ValueError(f"unrecognized transform name {text!r}")


@dataclass(frozen=True)
class TransformFamily:
    """Ordered transforms with two designated extreme members."""

    family_name: str
    members: tuple
    vertex_plus: int
    vertex_minus: int

    def __post_init__(self):
        if not self.members:
            raise ValueError("family needs at least one member")
        if not isinstance(self.members[0], Identity):
            raise ValueError("first family member must be the identity")
        n = len(self.members)
        ok = 0 <= self.vertex_plus < n and 0 <= self.vertex_minus < n
        # distinct vertices, except for the degenerate identity-only family
        # used in evaluation fixtures
        if ok and n > 1:
            ok = self.vertex_plus != self.vertex_minus
        if not ok:
            raise ValueError(f"bad vertex indices ({self.vertex_plus}, {self.vertex_minus})")

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def training_vertex(self) -> Transform:
        return self.members[self.vertex_minus]


@lru_cache(maxsize=64)
def _lowpass_mask(h: int, w: int, radius: float) -> np.ndarray:
    # distance measured on the centered spectrum, where fftshift puts DC
    cy, cx = h // 2, w // 2
    ys, xs = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    return (np.hypot(ys - cy, xs - cx) <= radius).astype(np.float64)


@lru_cache(maxsize=64)
def _rotation_gather(h: int, w: int, degrees: float):
    """Bilinear source indices and weights for a clockwise rotation."""
    theta = np.deg2rad(degrees)
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    ys, xs = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    dx, dy = xs - cx, ys - cy
    src_x = dx * np.cos(theta) + dy * np.sin(theta) + cx
    src_y = -dx * np.sin(theta) + dy * np.cos(theta) + cy
    x0 = np.floor(src_x).astype(np.intp)
    y0 = np.floor(src_y).astype(np.intp)
    fx, fy = src_x - x0, src_y - y0
    corners = []
    for oy, ox, wgt in (
            (0, 0, (1 - fy) * (1 - fx)),
            (0, 1, (1 - fy) * fx),
            (1, 0, fy * (1 - fx)),
            (1, 1, fy * fx)):
        yy, xx = y0 + oy, x0 + ox
        inside = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
        corners.append((np.clip(yy, 0, h - 1), np.clip(xx, 0, w - 1), wgt * inside))
    return corners


def apply_batch(t: Transform, images: np.ndarray) -> np.ndarray:
    """Apply one transform to a stack of images; order preserved."""
    x = np.asarray(images, dtype=np.float64)
    if x.ndim != 3:
        raise ShapeError(f"apply_batch needs (n, h, w) images, got {x.shape}")
    n, h, w = x.shape
    if isinstance(t, Identity):
        return x.copy()
    if isinstance(t, PixelMap):
        base = (1.0 - x) if t.negate else x
        return t.scale * base
    if isinstance(t, Rotate):
        out = np.zeros_like(x)
        for yy, xx, wgt in _rotation_gather(h, w, float(t.degrees)):
            out += x[:, yy, xx] * wgt
        return np.clip(out, 0.0, 1.0)
    if isinstance(t, FreqCutoff):
        spectrum = _dft_matrix(h) @ x @ _dft_matrix(w)
        centered = np.fft.fftshift(spectrum, axes=(1, 2))
        centered *= _lowpass_mask(h, w, float(t.radius))
        masked = np.fft.ifftshift(centered, axes=(1, 2))
        back = _dft_matrix(h).conj() @ masked @ _dft_matrix(w).conj() / (h * w)
        return np.clip(back.real, 0.0, 1.0)
    raise TypeError(f"unknown transform {t!r}")


def apply(t: Transform, image: np.ndarray) -> np.ndarray:
    """Apply one transform to a single (h, w) image."""
    x = np.asarray(image, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"apply needs an (h, w) image, got {x.shape}")
    return apply_batch(t, x[None])[0]


def _scaled_radii(image_size: int) -> list[float]:
    # the reference radii target 28-pixel images; scale proportionally
    return [float(round(r * image_size / 28)) for r in (12, 10, 8, 6)]


def family_texture(image_size: int = 28) -> TransformFamily:
    """Identity plus four concentric low-pass filters; extreme = tightest."""
    radii = _scaled_radii(image_size)
    members = (Identity(),) + tuple(FreqCutoff(r) for r in radii)
    return TransformFamily("texture", members, 0, 4)


def family_rotation() -> TransformFamily:
    """Identity plus clockwise rotations up to 60 degrees."""
    members = (Identity(),) + tuple(Rotate(float(d)) for d in (15, 30, 45, 60))
    return TransformFamily("rotation", members, 0, 4)


def family_contrast() -> TransformFamily:
    """Intensity rescalings and their negated counterparts."""
    members = (
        Identity(),
        PixelMap(0.5, False),
        PixelMap(0.25, False),
        PixelMap(1.0, True),
        PixelMap(0.5, True),
        PixelMap(0.25, True),
    )
    return TransformFamily("contrast", members, 0, 3)


FAMILY_NAMES = ("texture", "rotation", "contrast")


def family_by_name(name: str, image_size: int = 28) -> TransformFamily:
    """Look up a built-in family; texture radii scale with image size."""
    if name == "texture":
        return family_texture(image_size)
    if name == "rotation":
        return family_rotation()
    if name == "contrast":
        return family_contrast()
    raise ValueError(f"unknown family {name!r}; choose from {FAMILY_NAMES}")
