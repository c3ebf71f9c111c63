"""Hidden-variable model for the two stations of a Franson interferometer.

Each photon pair carries a point ``(phi, r)`` drawn uniformly from
``[0, 2pi) x [0, 1)``.  The left station shifts ``phi`` to ``phi - phi1``,
the right station to ``phi + phi2``, and each station reads its outcome
(detector sign and early/late timing) off a fixed chart.

Left chart, with ``h = (pi/8)|sin phi'|`` and ``mid = 1/4 + h/2``.  On the
first half ``[0, pi)`` the labels are (reading ``r`` upwards)::

    [0, h)          +E      bottom lobe
    [h, mid)        +L
    [mid, 1/2)      -L
    [1/2, 1-mid)    -E
    [1-mid, 1-h)    +E
    [1-h, 1)        +L      top lobe

and on ``[pi, 2pi)`` every sign is flipped.  The right chart is four
quadrants: sign from the half of the circle, timing from the half of ``r``.

All region boundaries are lower-inclusive / upper-exclusive in ``r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Callable

import numpy as np
from scipy.optimize import brentq

TWO_PI = 2.0 * math.pi
LOBE_AMPLITUDE = math.pi / 8.0


def reduce_angle(x: float) -> float:
    """Reduce ``x`` into ``[0, 2pi)``."""
    y = math.fmod(x, TWO_PI)
    if y < 0.0:
        y += TWO_PI
    # fmod/addition can round up to exactly 2pi for tiny negative inputs
    return 0.0 if y >= TWO_PI else y


def reduce_angles(x: np.ndarray) -> np.ndarray:
    y = np.mod(x, TWO_PI)
    return np.where(y >= TWO_PI, 0.0, y)


class Timing(IntEnum):
    EARLY = 0
    LATE = 1

    @property
    def short(self) -> str:
        return "E" if self is Timing.EARLY else "L"


class Label(IntEnum):
    """Detector sign x timing class, in table order (+E, -E, +L, -L)."""

    PLUS_EARLY = 0
    MINUS_EARLY = 1
    PLUS_LATE = 2
    MINUS_LATE = 3

    @classmethod
    def of(cls, sign: int, timing: Timing) -> Label:
        if sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {sign!r}")
        return cls(int(sign == -1) + 2 * int(timing))

    @property
    def sign(self) -> int:
        return -1 if self.value & 1 else 1

    @property
    def timing(self) -> Timing:
        return Timing(self.value >> 1)

    def __str__(self) -> str:
        return f"{'+' if self.sign > 0 else '-'}{self.timing.short}"


LABELS = tuple(Label)

# Vectorised lookups from label code.
LABEL_SIGN = np.array([lab.sign for lab in LABELS], dtype=np.int8)
LABEL_TIMING = np.array([int(lab.timing) for lab in LABELS], dtype=np.int8)


def label_codes(sign: np.ndarray, timing: np.ndarray) -> np.ndarray:
    return (np.asarray(sign) == -1).astype(np.int8) + 2 * np.asarray(timing, dtype=np.int8)


@dataclass(frozen=True)
class HiddenVariablePair:
    phi: float
    r: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.r < 1.0:
            raise ValueError(f"r must lie in [0, 1), got {self.r}")
        object.__setattr__(self, "phi", reduce_angle(self.phi))


@dataclass(frozen=True)
class Settings:
    """Phase-plate settings of the left and right interferometers (radians)."""

    phi1: float = 0.0
    phi2: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "phi1", reduce_angle(self.phi1))
        object.__setattr__(self, "phi2", reduce_angle(self.phi2))

    @property
    def psi(self) -> float:
        return reduce_angle(self.phi1 + self.phi2)

    @classmethod
    def from_psi(cls, psi: float, split: float = 0.5) -> Settings:
        """Settings whose sum is ``psi``, with ``split * psi`` on the left plate."""
        return cls(split * psi, (1.0 - split) * psi)


def shift_left(phi: float, phi1: float) -> float:
    return reduce_angle(phi - phi1)


def shift_right(phi: float, phi2: float) -> float:
    return reduce_angle(phi + phi2)


def lobe_height(phi_shifted):
    """``(pi/8)|sin phi'|``; works on scalars and arrays."""
    if isinstance(phi_shifted, np.ndarray):
        return LOBE_AMPLITUDE * np.abs(np.sin(phi_shifted))
    return LOBE_AMPLITUDE * abs(math.sin(phi_shifted))


def even_split(h):
    return 0.25 + 0.5 * h


# r-section slots of the left chart, bottom to top.  Each entry gives the label
# on the first half of the circle; the second half flips the sign.
_LEFT_SLOTS = (
    Label.PLUS_EARLY,
    Label.PLUS_LATE,
    Label.MINUS_LATE,
    Label.MINUS_EARLY,
    Label.PLUS_EARLY,
    Label.PLUS_LATE,
)
_FLIP = np.array([Label.MINUS_EARLY, Label.PLUS_EARLY, Label.MINUS_LATE, Label.PLUS_LATE], dtype=np.int8)


class LeftChart:
    """Response map of the left station.

    ``split`` maps the lobe height ``h`` to the boundary ``mid`` between the
    two Late bands of the lower half.  Only the default even split reproduces
    the quantum predictions; other choices exist for mutation testing.
    """

    station = "left"

    def __init__(self, split: Callable = even_split, name: str = "left"):
        self.split = split
        self.name = name

    def classify(self, phi_prime: float, r: float) -> Label:
        h = lobe_height(phi_prime)
        mid = self.split(h)
        first = phi_prime < math.pi
        same, other = (1, -1) if first else (-1, 1)
        if r < 0.5:
            if r < h:
                return Label.of(same, Timing.EARLY)
            if r < mid:
                return Label.of(same, Timing.LATE)
            return Label.of(other, Timing.LATE)
        s = 1.0 - r
        if s <= h:
            return Label.of(same, Timing.LATE)
        if s <= mid:
            return Label.of(same, Timing.EARLY)
        return Label.of(other, Timing.EARLY)

    def classify_array(self, phi_prime: np.ndarray, r: np.ndarray) -> np.ndarray:
        phi_prime = np.asarray(phi_prime, dtype=float)
        r = np.asarray(r, dtype=float)
        h = lobe_height(phi_prime)
        mid = self.split(h)
        s = 1.0 - r
        lower = r < 0.5
        code = np.select(
            [
                lower & (r < h),
                lower & (r < mid),
                lower,
                s <= h,
                s <= mid,
            ],
            [Label.PLUS_EARLY, Label.PLUS_LATE, Label.MINUS_LATE, Label.PLUS_LATE, Label.PLUS_EARLY],
            default=Label.MINUS_EARLY,
        ).astype(np.int8)
        return np.where(phi_prime < math.pi, code, _FLIP[code])

    def section_table(self, phi_prime: np.ndarray):
        """Slot boundaries and labels for each ``phi'``.

        Returns ``(lo, hi, labels)`` with shapes ``(6, n)``.  Slots may be
        empty (``lo == hi``) but never overlap, and together cover ``[0, 1)``.
        """
        phi_prime = np.atleast_1d(np.asarray(phi_prime, dtype=float))
        h = lobe_height(phi_prime)
        # The if-chain in classify gives the lobe priority when mid < h.
        m = np.maximum(self.split(h) * np.ones_like(h), h)
        m = np.minimum(m, 0.5)
        zero = np.zeros_like(h)
        half = np.full_like(h, 0.5)
        one = np.ones_like(h)
        edges = np.stack([zero, h, m, half, 1.0 - m, 1.0 - h, one])
        base = np.array(_LEFT_SLOTS, dtype=np.int8)[:, None]
        labels = np.where(phi_prime[None, :] < math.pi, base, _FLIP[base])
        return edges[:-1], edges[1:], labels

    def kinks(self) -> list[float]:
        """Shifted angles where the section boundaries stop being smooth."""
        points = [0.0, math.pi]
        g = lambda hh: hh - self.split(hh)  # noqa: E731
        lo, hi = 1e-15, LOBE_AMPLITUDE
        if g(lo) * g(hi) < 0.0:
            h_star = brentq(g, lo, hi, xtol=1e-15)
            a = math.asin(h_star / LOBE_AMPLITUDE)
            points += [a, math.pi - a, math.pi + a, TWO_PI - a]
        return sorted(points)

    def __repr__(self) -> str:
        return f"LeftChart({self.name!r})"


class RightChart:
    """Quadrant chart of the right station."""

    station = "right"
    name = "right"

    def classify(self, phi_dprime: float, r: float) -> Label:
        sign = 1 if phi_dprime < math.pi else -1
        return Label.of(sign, Timing.EARLY if r < 0.5 else Timing.LATE)

    def classify_array(self, phi_dprime: np.ndarray, r: np.ndarray) -> np.ndarray:
        sign = np.where(np.asarray(phi_dprime) < math.pi, 1, -1)
        timing = (np.asarray(r) >= 0.5).astype(np.int8)
        return label_codes(sign, timing)

    def section_table(self, phi_dprime: np.ndarray):
        phi_dprime = np.atleast_1d(np.asarray(phi_dprime, dtype=float))
        n = phi_dprime.size
        lo = np.array([[0.0], [0.5]]) * np.ones(n)
        hi = np.array([[0.5], [1.0]]) * np.ones(n)
        first = phi_dprime < math.pi
        labels = np.stack(
            [
                np.where(first, Label.PLUS_EARLY, Label.MINUS_EARLY),
                np.where(first, Label.PLUS_LATE, Label.MINUS_LATE),
            ]
        ).astype(np.int8)
        return lo, hi, labels

    def kinks(self) -> list[float]:
        return [0.0, math.pi]

    def __repr__(self) -> str:
        return "RightChart()"


LEFT_CHART = LeftChart()
RIGHT_CHART = RightChart()


def corrupted_left_chart() -> LeftChart:
    """Left chart with the Late bands split at a fixed ``r = 1/4``."""
    return LeftChart(split=lambda h: 0.25 + 0.0 * h, name="left-corrupted")


def classify_left(phi_prime: float, r: float) -> Label:
    return LEFT_CHART.classify(phi_prime, r)


def classify_right(phi_dprime: float, r: float) -> Label:
    return RIGHT_CHART.classify(phi_dprime, r)


def respond_pair(hv: HiddenVariablePair, settings: Settings) -> tuple[Label, Label]:
    left = classify_left(shift_left(hv.phi, settings.phi1), hv.r)
    right = classify_right(shift_right(hv.phi, settings.phi2), hv.r)
    return left, right


def respond_arrays(
    phi: np.ndarray,
    r: np.ndarray,
    settings: Settings,
    left_chart: LeftChart = LEFT_CHART,
    right_chart: RightChart = RIGHT_CHART,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`respond_pair`; returns label codes for both stations."""
    left = left_chart.classify_array(reduce_angles(phi - settings.phi1), r)
    right = right_chart.classify_array(reduce_angles(phi + settings.phi2), r)
    return left, right


def r_sections(chart, phi_shifted: float) -> list[tuple[float, float, Label]]:
    """Ordered, non-empty half-open r-intervals of ``chart`` at one angle."""
    lo, hi, labels = chart.section_table(np.array([phi_shifted]))
    out = []
    for a, b, lab in zip(lo[:, 0], hi[:, 0], labels[:, 0]):
        if b > a:
            out.append((float(a), float(b), Label(int(lab))))
    return out
