"""Derivation of the six per-sample image types and hole geometry.

From a raw photo plus precomputed annotations (68 facial landmarks and a
foreground mask) this module derives: the resized original, the cropped
(holed) image, the inner-face convex-hull mask, the face part cut out by the
dilated mask, the landmark dot image, and the foreground mask — all at a
common working resolution. Everything here is a pure function of its inputs.

Coordinate convention: landmark (x, y) means column x, row y; the pixel at
mask[r, c] has its center at coordinates (c, r).
"""

from dataclasses import dataclass, field

import cv2
import numpy as np
from scipy import ndimage

# Eyes + nose + mouth subset of the standard 68-point annotation (41 points;
# eyebrows and jawline excluded — the later dilation pulls the brows back in).
FACE_PART_START = 27
FACE_PART_END = 68

LEFT_EYE = slice(36, 42)
RIGHT_EYE = slice(42, 48)

HOLE_LABELS = ("O1", "O2", "O3", "O4", "O5", "O6")

# Face-mask dilation radius as a fraction of image width.
DILATION_FRACTION = 0.03


@dataclass(frozen=True)
class LandmarkSet:
    """Ordered 68-point facial landmark annotation in pixel coordinates."""

    points: np.ndarray  # (68, 2) float64, columns (x, y)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.shape != (68, 2):
            raise ValueError(f"expected 68 (x, y) landmarks, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("landmark coordinates must be finite")
        object.__setattr__(self, "points", pts)

    def face_part_points(self):
        return self.points[FACE_PART_START:FACE_PART_END]

    def transformed(self, offset_xy=(0.0, 0.0), scale=1.0):
        """Landmarks after translating by -offset and scaling (crop + resize)."""
        pts = (self.points - np.asarray(offset_xy, dtype=np.float64)) * float(scale)
        return LandmarkSet(pts)


@dataclass
class HoleSpec:
    """Where to cut the hole: a fractional rectangle or an explicit mask."""

    kind: str  # "rectangle" | "irregular"
    rect: tuple | None = None  # (top, left, height, width), fractions of H/W
    mask: np.ndarray | None = None  # binary (H, W), 1 = missing
    fill_value: float = 1.0
    label: str | None = None

    def validate(self, shape=None):
        if self.kind not in ("rectangle", "irregular"):
            raise ValueError(f"unknown hole kind {self.kind!r}")
        if not 0.0 <= self.fill_value <= 1.0:
            raise ValueError(f"fill_value {self.fill_value} outside [0, 1]")
        if self.kind == "rectangle":
            if self.rect is None:
                raise ValueError("rectangle hole needs a rect")
            top, left, height, width = self.rect
            for name, v in zip(("top", "left", "height", "width"), self.rect):
                if not 0.0 <= v <= 1.0:
                    raise ValueError(f"rect {name}={v} outside [0, 1]")
            if top + height > 1.0 + 1e-12 or left + width > 1.0 + 1e-12:
                raise ValueError(f"rect {self.rect} exceeds the unit square")
        else:
            if self.mask is None:
                raise ValueError("irregular hole needs an explicit mask")
            if shape is not None and tuple(self.mask.shape) != tuple(shape):
                raise ValueError(
                    f"irregular mask shape {self.mask.shape} does not match image {shape}")


@dataclass
class RegionBundle:
    """One sample's derived images, all (H, W[, 3]) float32 at a shared size."""

    x_real: np.ndarray
    x_crop: np.ndarray
    x_m: np.ndarray
    x_f: np.ndarray
    x_l: np.ndarray
    x_fg: np.ndarray
    hole_mask: np.ndarray
    sample_id: str = ""
    hole_label: str | None = None
    landmarks: LandmarkSet | None = field(default=None, repr=False)

    def validate(self):
        h, w = self.x_real.shape[:2]
        for name in ("x_real", "x_crop", "x_m", "x_f", "x_l", "x_fg", "hole_mask"):
            arr = getattr(self, name)
            if arr.shape[:2] != (h, w):
                raise ValueError(f"{name} shape {arr.shape} disagrees with ({h}, {w})")
        for name in ("x_m", "x_l", "x_fg", "hole_mask"):
            arr = getattr(self, name)
            if not np.all((arr == 0.0) | (arr == 1.0)):
                raise ValueError(f"{name} is not exactly binary")
        return self


def _convex_hull(points):
    """Monotone-chain convex hull, counterclockwise; degenerate inputs give
    the 1- or 2-point hull rather than failing."""
    pts = sorted(set((float(x), float(y)) for x, y in points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) == 2 and hull[0] == hull[1]:  # collinear set collapses here
        hull = hull[:1]
    return hull


def convex_hull_mask(points, size):
    """Binary image whose set pixels are exactly those with centers inside or
    on the convex hull of `points`."""
    h, w = size
    if h <= 0 or w <= 0:
        raise ValueError(f"size {size} must be positive")
    hull = _convex_hull(np.asarray(points, dtype=np.float64))
    xs = np.arange(w, dtype=np.float64)[None, :]
    ys = np.arange(h, dtype=np.float64)[:, None]

    if len(hull) == 1:
        (x0, y0) = hull[0]
        inside = (xs == x0) & (ys == y0)
    elif len(hull) == 2:
        (x0, y0), (x1, y1) = hull
        colinear = (x1 - x0) * (ys - y0) - (y1 - y0) * (xs - x0) == 0.0
        in_box = ((xs >= min(x0, x1)) & (xs <= max(x0, x1))
                  & (ys >= min(y0, y1)) & (ys <= max(y0, y1)))
        inside = colinear & in_box
    else:
        inside = np.ones((h, w), dtype=bool)
        for (x0, y0), (x1, y1) in zip(hull, hull[1:] + hull[:1]):
            inside &= (x1 - x0) * (ys - y0) - (y1 - y0) * (xs - x0) >= 0.0
    return inside.astype(np.float32)


def face_mask_from_landmarks(landmarks: LandmarkSet, size):
    """Inner-face mask: convex hull of the 41 eyes/nose/mouth landmarks."""
    return convex_hull_mask(landmarks.face_part_points(), size)


def dilate_mask(mask, fraction):
    """Morphological dilation with a square element of radius
    round(fraction * width) pixels."""
    if fraction < 0:
        raise ValueError(f"dilation fraction must be >= 0, got {fraction}")
    mask = np.asarray(mask)
    radius = int(round(fraction * mask.shape[1]))
    if radius == 0:
        return mask.astype(np.float32).copy()
    element = np.ones((2 * radius + 1, 2 * radius + 1), dtype=bool)
    return ndimage.binary_dilation(mask > 0, structure=element).astype(np.float32)


def face_part(x_real, dilated_mask):
    """Image restricted to the (dilated) face mask; background exactly zero."""
    x_real = np.asarray(x_real)
    dilated_mask = np.asarray(dilated_mask)
    if x_real.shape[:2] != dilated_mask.shape[:2]:
        raise ValueError(
            f"image {x_real.shape} and mask {dilated_mask.shape} shapes disagree")
    m = dilated_mask if x_real.ndim == dilated_mask.ndim else dilated_mask[..., None]
    return (x_real * m).astype(np.float32)


def render_landmark_image(landmarks: LandmarkSet, size, radius):
    """Binary image with a filled Euclidean disc at each landmark; anything
    out of bounds is clipped."""
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    h, w = size
    out = np.zeros((h, w), dtype=np.float32)
    xs = np.arange(w, dtype=np.float64)[None, :]
    ys = np.arange(h, dtype=np.float64)[:, None]
    r2 = float(radius) ** 2
    for x, y in landmarks.points:
        if x < -radius or x > w - 1 + radius or y < -radius or y > h - 1 + radius:
            continue
        out[(xs - x) ** 2 + (ys - y) ** 2 <= r2] = 1.0
    return out


def default_landmark_radius(resolution):
    # one pixel at 256^2, scaled with resolution, never vanishing
    return max(1, int(round(resolution / 256)))


def apply_hole(x_real, spec: HoleSpec):
    """Cut the hole: inside it every channel becomes fill_value; outside the
    image is untouched. Returns (x_crop, hole_mask)."""
    x_real = np.asarray(x_real, dtype=np.float32)
    h, w = x_real.shape[:2]
    spec.validate((h, w))
    if spec.kind == "rectangle":
        top, left, height, width = spec.rect
        r0 = int(np.floor(top * h))
        c0 = int(np.floor(left * w))
        rh = int(np.floor(height * h))
        cw = int(np.floor(width * w))
        hole = np.zeros((h, w), dtype=np.float32)
        hole[r0:r0 + rh, c0:c0 + cw] = 1.0
    else:
        hole = (np.asarray(spec.mask) > 0).astype(np.float32)
    x_crop = x_real.copy()
    x_crop[hole > 0] = spec.fill_value  # all channels when x_real is (H, W, C)
    return x_crop, hole


def foreground_weight_map(x_fg, gamma):
    """Per-pixel loss weight: 1 on the foreground, gamma on the background."""
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    x_fg = np.asarray(x_fg)
    if not np.all((x_fg == 0.0) | (x_fg == 1.0)):
        raise ValueError("foreground mask must be exactly binary")
    return (x_fg + gamma * (1.0 - x_fg)).astype(np.float32)


def hole_spec_for_label(label, landmarks: LandmarkSet, size, fill_value=1.0):
    """Landmark-anchored rectangle for one of the six named hole regions:
    O1/O2 boxes over each eye, O3 upper / O6 lower 45% of the face box,
    O4/O5 left/right half of the face box."""
    if label not in HOLE_LABELS:
        raise ValueError(f"unknown hole label {label!r}; expected one of {HOLE_LABELS}")
    h, w = size
    pts = landmarks.points
    fx = pts[:, 0] / w
    fy = pts[:, 1] / h

    def clipped(top, left, height, width):
        top = min(max(top, 0.0), 1.0)
        left = min(max(left, 0.0), 1.0)
        height = min(max(height, 0.0), 1.0 - top)
        width = min(max(width, 0.0), 1.0 - left)
        return HoleSpec("rectangle", rect=(top, left, height, width),
                        fill_value=fill_value, label=label)

    if label in ("O1", "O2"):
        eye = LEFT_EYE if label == "O1" else RIGHT_EYE
        cx = float(fx[eye].mean())
        cy = float(fy[eye].mean())
        return clipped(cy - 0.11, cx - 0.15, 0.22, 0.30)

    top, left = float(fy.min()), float(fx.min())
    bh, bw = float(fy.max()) - top, float(fx.max()) - left
    if label == "O3":
        return clipped(top, left, 0.45 * bh, bw)
    if label == "O6":
        return clipped(top + 0.55 * bh, left, 0.45 * bh, bw)
    if label == "O4":
        return clipped(top, left, bh, 0.5 * bw)
    return clipped(top, left + 0.5 * bw, bh, 0.5 * bw)  # O5


def resolve_hole_spec(text, landmarks=None, size=None, fill_value=1.0):
    """Parse a hole spec string: 'O1'..'O6', 'rect:top,left,height,width',
    or 'none'. Labelled specs need landmarks and the target size."""
    text = text.strip()
    if text == "none":
        return HoleSpec("rectangle", rect=(0.0, 0.0, 0.0, 0.0),
                        fill_value=fill_value, label=None)
    if text in HOLE_LABELS:
        if landmarks is None or size is None:
            raise ValueError(f"hole label {text} needs landmarks to resolve")
        return hole_spec_for_label(text, landmarks, size, fill_value)
    if text.startswith("rect:"):
        parts = text[len("rect:"):].split(",")
        if len(parts) != 4:
            raise ValueError(f"rect spec needs 4 comma-separated fractions: {text!r}")
        rect = tuple(float(p) for p in parts)
        spec = HoleSpec("rectangle", rect=rect, fill_value=fill_value, label="custom")
        spec.validate()
        return spec
    raise ValueError(f"cannot parse hole spec {text!r}")


def to_float_image(image):
    image = np.asarray(image)
    if image.dtype == np.uint8:
        image = image.astype(np.float32) / 255.0
    image = image.astype(np.float32)
    if image.ndim == 2:
        image = np.repeat(image[..., None], 3, axis=2)
    return np.clip(image, 0.0, 1.0)


def build_region_bundle(image, landmarks: LandmarkSet, foreground_mask, spec,
                        resolution, fill_value=1.0, landmark_radius=None,
                        dilation_fraction=DILATION_FRACTION, sample_id=""):
    """Compose the whole per-sample pipeline: center-crop to a square, resize
    to the working resolution (bilinear for intensities, nearest for masks),
    then derive every bundle image. Deterministic for identical inputs."""
    if resolution <= 0:
        raise ValueError(f"resolution must be positive, got {resolution}")
    image = to_float_image(image)
    fg = np.asarray(foreground_mask)
    if fg.ndim == 3:
        fg = fg[..., 0]
    if image.shape[:2] != fg.shape[:2]:
        raise ValueError(
            f"image {image.shape} and foreground mask {fg.shape} shapes disagree")

    h, w = image.shape[:2]
    side = min(h, w)
    top, left = (h - side) // 2, (w - side) // 2
    image = image[top:top + side, left:left + side]
    fg = fg[top:top + side, left:left + side]
    scale = resolution / side
    lms = landmarks.transformed(offset_xy=(left, top), scale=scale)

    x_real = np.clip(cv2.resize(image, (resolution, resolution),
                                interpolation=cv2.INTER_LINEAR), 0.0, 1.0)
    x_fg = (cv2.resize(fg.astype(np.float32), (resolution, resolution),
                       interpolation=cv2.INTER_NEAREST) > 0.5).astype(np.float32)

    x_m = face_mask_from_landmarks(lms, (resolution, resolution))
    x_f = face_part(x_real, dilate_mask(x_m, dilation_fraction))
    if landmark_radius is None:
        landmark_radius = default_landmark_radius(resolution)
    x_l = render_landmark_image(lms, (resolution, resolution), landmark_radius)

    if isinstance(spec, str):
        spec = resolve_hole_spec(spec, lms, (resolution, resolution), fill_value)
    x_crop, hole_mask = apply_hole(x_real, spec)

    return RegionBundle(x_real=x_real, x_crop=x_crop, x_m=x_m, x_f=x_f, x_l=x_l,
                        x_fg=x_fg, hole_mask=hole_mask, sample_id=sample_id,
                        hole_label=spec.label, landmarks=lms).validate()
