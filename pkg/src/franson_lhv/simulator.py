"""Time-tagged event streams for the Franson experiment under the local model.

Times are integer femtoseconds internally.  Each pair is emitted at a random
time (exponential spacing), carries hidden variables ``(phi, r)``, and both
stations decide sign and early/late timing locally.  A Late detection is
retarded by the arm delay; both detections get independent jitter uniform
on ``[-t_coh, +t_coh]``.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from enum import IntEnum
from typing import Sequence

import numpy as np

from . import rng as rngmod
from .model import LABEL_SIGN, LABEL_TIMING, TWO_PI, Label, Settings, respond_arrays
from .quantum import chsh_combine, chsh_settings, quantum_joint_table

FS_PER_S = 10**15


class ConfigError(ValueError):
    """A SimConfig violates one of its scale inequalities."""


def to_fs(seconds: float) -> int:
    return int(round(seconds * FS_PER_S))


def fs_to_decimal(t: int) -> str:
    """Exact decimal-seconds rendering of an integer femtosecond count."""
    sign = "-" if t < 0 else ""
    q, rem = divmod(abs(int(t)), FS_PER_S)
    return f"{sign}{q}.{rem:015d}"


@dataclass(frozen=True)
class SimConfig:
    delta_t_arm: float = 1e-9
    t_coh: float = 1e-12
    mean_interval: float = 100e-6
    transit: float = 10e-9
    coincidence_window: float = 0.5e-9
    n_pairs: int = 10**6
    seed: int = 0

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.t_coh <= 0:
            raise ConfigError("t_coh > 0 violated")
        if not self.delta_t_arm >= 10 * self.t_coh:
            raise ConfigError(f"delta_t_arm >= 10*t_coh violated ({self.delta_t_arm} < {10 * self.t_coh})")
        if not self.mean_interval >= 10 * self.delta_t_arm:
            raise ConfigError(
                f"mean_interval >= 10*delta_t_arm violated ({self.mean_interval} < {10 * self.delta_t_arm})"
            )
        if not 2 * self.t_coh < self.coincidence_window < self.delta_t_arm:
            raise ConfigError(
                f"2*t_coh < coincidence_window < delta_t_arm violated "
                f"({2 * self.t_coh} < {self.coincidence_window} < {self.delta_t_arm})"
            )
        if self.transit < 0:
            raise ConfigError("transit >= 0 violated")
        if self.n_pairs < 1:
            raise ConfigError("n_pairs >= 1 violated")

    @property
    def classification_is_exact(self) -> bool:
        """True when jitter can never push a pair across the window."""
        w, d, j = to_fs(self.coincidence_window), to_fs(self.delta_t_arm), to_fs(self.t_coh)
        return 2 * j <= w < d - 2 * j

    def replace(self, **changes) -> SimConfig:
        return SimConfig(**{**asdict(self), **changes})

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


class Tag(IntEnum):
    COINCIDENT = 0
    LEFT_EARLY_RIGHT_LATE = 1
    LEFT_LATE_RIGHT_EARLY = 2

    @property
    def short(self) -> str:
        return ("C", "EL", "LE")[self.value]


@dataclass(frozen=True)
class PairEvent:
    pair_id: int
    t_emit: int
    left_sign: int
    left_t: int
    right_sign: int
    right_t: int
    left_timing: int
    right_timing: int


@dataclass
class EventStream:
    """Columnar event stream; all times in integer femtoseconds."""

    pair_id: np.ndarray
    t_emit: np.ndarray
    left_sign: np.ndarray
    left_t: np.ndarray
    right_sign: np.ndarray
    right_t: np.ndarray
    left_timing: np.ndarray
    right_timing: np.ndarray
    settings: Settings
    config: SimConfig
    remove_right: bool = False

    def __len__(self) -> int:
        return int(self.pair_id.size)

    def __getitem__(self, i: int) -> PairEvent:
        return PairEvent(
            int(self.pair_id[i]),
            int(self.t_emit[i]),
            int(self.left_sign[i]),
            int(self.left_t[i]),
            int(self.right_sign[i]),
            int(self.right_t[i]),
            int(self.left_timing[i]),
            int(self.right_timing[i]),
        )

    @property
    def left_labels(self) -> np.ndarray:
        return (self.left_sign == -1).astype(np.int8) + 2 * self.left_timing

    @property
    def right_labels(self) -> np.ndarray:
        return (self.right_sign == -1).astype(np.int8) + 2 * self.right_timing


def _stream_block(config: SimConfig, settings: Settings, run: int, block: int, size: int):
    g = rngmod.block_rng(config.seed, rngmod.PURPOSE_STREAM, run, block)
    gaps = np.rint(g.exponential(to_fs(config.mean_interval), size)).astype(np.int64)
    phi = g.uniform(0.0, TWO_PI, size)
    r = g.random(size)
    j = to_fs(config.t_coh)
    jitter_l = g.integers(-j, j, size, endpoint=True, dtype=np.int64)
    jitter_r = g.integers(-j, j, size, endpoint=True, dtype=np.int64)

    left, right = respond_arrays(phi, r, settings)
    local_t = np.cumsum(gaps)
    return {
        "local_t": local_t,
        "total": int(local_t[-1]),
        "left": left,
        "right": right,
        "jitter_l": jitter_l,
        "jitter_r": jitter_r,
    }


def generate_stream(
    config: SimConfig,
    settings: Settings,
    *,
    remove_right: bool = False,
    run: int = 0,
    workers: int = 1,
) -> EventStream:
    """Simulate ``config.n_pairs`` emissions and their detections.

    With ``remove_right`` the right interferometer is taken out: every right
    photon lands on detector +1, undelayed.  The hidden variables and left
    outcomes are drawn from the same random stream either way.
    """
    config.validate()
    sizes = rngmod.block_sizes(config.n_pairs)
    jobs = [(config, settings, run, k, size) for k, size in enumerate(sizes)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda a: _stream_block(*a), jobs))
    else:
        parts = [_stream_block(*a) for a in jobs]

    offsets = np.concatenate([[0], np.cumsum([p["total"] for p in parts])[:-1]]).astype(np.int64)
    t_emit = np.concatenate([p["local_t"] + off for p, off in zip(parts, offsets)])
    left = np.concatenate([p["left"] for p in parts])
    right = np.concatenate([p["right"] for p in parts])
    jitter_l = np.concatenate([p["jitter_l"] for p in parts])
    jitter_r = np.concatenate([p["jitter_r"] for p in parts])

    transit, delay = to_fs(config.transit), to_fs(config.delta_t_arm)
    left_timing = LABEL_TIMING[left].astype(np.int8)
    left_t = t_emit + transit + delay * left_timing.astype(np.int64) + jitter_l
    if remove_right:
        right_sign = np.ones(len(t_emit), dtype=np.int8)
        right_timing = np.zeros(len(t_emit), dtype=np.int8)
    else:
        right_sign = LABEL_SIGN[right].astype(np.int8)
        right_timing = LABEL_TIMING[right].astype(np.int8)
    right_t = t_emit + transit + delay * right_timing.astype(np.int64) + jitter_r

    return EventStream(
        pair_id=np.arange(len(t_emit), dtype=np.int64),
        t_emit=t_emit,
        left_sign=LABEL_SIGN[left].astype(np.int8),
        left_t=left_t,
        right_sign=right_sign,
        right_t=right_t,
        left_timing=left_timing,
        right_timing=right_timing,
        settings=settings,
        config=config,
        remove_right=remove_right,
    )


def remove_right_analyzer(config: SimConfig, settings: Settings, **kwargs) -> EventStream:
    return generate_stream(config, settings, remove_right=True, **kwargs)


def coincidence_sort(stream: EventStream, window: float | None = None) -> np.ndarray:
    """Tag each pair by its left/right detection-time difference."""
    w = to_fs(stream.config.coincidence_window if window is None else window)
    dt = stream.right_t - stream.left_t
    return np.where(
        np.abs(dt) <= w,
        Tag.COINCIDENT,
        np.where(dt > 0, Tag.LEFT_EARLY_RIGHT_LATE, Tag.LEFT_LATE_RIGHT_EARLY),
    ).astype(np.int8)


def truth_tags(stream: EventStream) -> np.ndarray:
    lt, rt = stream.left_timing, stream.right_timing
    return np.where(lt == rt, Tag.COINCIDENT, np.where(lt < rt, Tag.LEFT_EARLY_RIGHT_LATE, Tag.LEFT_LATE_RIGHT_EARLY)).astype(
        np.int8
    )


def _corr(products: np.ndarray) -> tuple[float, float]:
    n = products.size
    if n == 0:
        return float("nan"), float("nan")
    e = float(products.mean())
    return e, math.sqrt(max(1.0 - e * e, 0.0) / n)


@dataclass
class RunSummary:
    settings: Settings
    n_pairs: int
    counts: np.ndarray
    tag_counts: dict[str, int]
    postselected: float
    postselected_se: float
    all_events: float
    all_events_se: float
    left_plus_fraction: float
    left_early_fraction: float
    right_plus_fraction: float
    remove_right: bool = False

    @property
    def coincident_fraction(self) -> float:
        return self.tag_counts["C"] / self.n_pairs

    def to_dict(self) -> dict:
        return {
            "phi1": self.settings.phi1,
            "phi2": self.settings.phi2,
            "psi": self.settings.psi,
            "n_pairs": self.n_pairs,
            "remove_right": self.remove_right,
            "coincident_fraction": self.coincident_fraction,
            "tag_counts": dict(self.tag_counts),
            "postselected_correlation": self.postselected,
            "postselected_correlation_se": self.postselected_se,
            "all_events_correlation": self.all_events,
            "all_events_correlation_se": self.all_events_se,
            "left_plus_fraction": self.left_plus_fraction,
            "left_early_fraction": self.left_early_fraction,
            "right_plus_fraction": self.right_plus_fraction,
            "labels": [str(lab) for lab in Label],
            "truth_counts": self.counts.tolist(),
            "oracle": {
                "postselected_correlation": math.cos(self.settings.psi),
                "all_events_correlation": 0.5 * math.cos(self.settings.psi),
                "joint_table": quantum_joint_table(self.settings).tolist(),
            },
        }


def summarize(stream: EventStream, tags: np.ndarray | None = None) -> RunSummary:
    """Correlations from detector signs, postselecting on the observed tags."""
    if tags is None:
        tags = coincidence_sort(stream)
    prod = stream.left_sign.astype(np.int64) * stream.right_sign
    post, post_se = _corr(prod[tags == Tag.COINCIDENT])
    every, every_se = _corr(prod)
    counts = np.bincount(
        4 * stream.left_labels.astype(np.intp) + stream.right_labels, minlength=16
    ).reshape(4, 4)
    tag_counts = np.bincount(tags, minlength=3)
    n = len(stream)
    return RunSummary(
        settings=stream.settings,
        n_pairs=n,
        counts=counts,
        tag_counts={t.short: int(tag_counts[t]) for t in Tag},
        postselected=post,
        postselected_se=post_se,
        all_events=every,
        all_events_se=every_se,
        left_plus_fraction=float(np.mean(stream.left_sign == 1)),
        left_early_fraction=float(np.mean(stream.left_timing == 0)),
        right_plus_fraction=float(np.mean(stream.right_sign == 1)),
        remove_right=stream.remove_right,
    )


@dataclass
class ChshReport:
    angles: tuple[float, float, float, float]
    n_pairs: int
    seed: int
    runs: list[RunSummary]

    @property
    def postselected_s(self) -> float:
        return chsh_combine([r.postselected for r in self.runs])

    @property
    def postselected_se(self) -> float:
        return math.sqrt(sum(r.postselected_se**2 for r in self.runs))

    @property
    def all_events_s(self) -> float:
        return chsh_combine([r.all_events for r in self.runs])

    @property
    def all_events_se(self) -> float:
        return math.sqrt(sum(r.all_events_se**2 for r in self.runs))

    @property
    def oracle(self) -> dict[str, float]:
        settings = chsh_settings(self.angles)
        return {
            "postselected": chsh_combine([math.cos(s.psi) for s in settings]),
            "all_events": chsh_combine([0.5 * math.cos(s.psi) for s in settings]),
        }

    def to_dict(self) -> dict:
        return {
            "angles": list(self.angles),
            "n_pairs_per_setting": self.n_pairs,
            "seed": self.seed,
            "postselected_S": self.postselected_s,
            "postselected_S_se": self.postselected_se,
            "all_events_S": self.all_events_s,
            "all_events_S_se": self.all_events_se,
            "oracle": self.oracle,
            "settings": [r.to_dict() for r in self.runs],
        }


def run_chsh(config: SimConfig, angles: Sequence[float], *, workers: int = 1) -> ChshReport:
    """Run all four setting pairs, each with its own random stream."""
    runs = []
    for k, s in enumerate(chsh_settings(angles)):
        stream = generate_stream(config, s, run=k, workers=workers)
        runs.append(summarize(stream))
    return ChshReport(tuple(float(a) for a in angles), config.n_pairs, config.seed, runs)


def efficiency_diagnostic() -> tuple[float, float, float]:
    """Postselected fraction, its per-station square root, and the 2(sqrt2 - 1) threshold."""
    fraction = 0.5
    return fraction, math.sqrt(fraction), 2.0 * (math.sqrt(2.0) - 1.0)


EVENT_HEADER = ("pair_id", "t_emit_s", "left_sign", "left_t_s", "right_sign", "right_t_s", "tag")


def write_events(stream: EventStream, fh, tags: np.ndarray | None = None, comment: str | None = None) -> None:
    """Write one comma-separated line per pair; times as exact decimal seconds."""
    if tags is None:
        tags = coincidence_sort(stream)
    if comment:
        fh.write(f"# {comment}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(EVENT_HEADER)
    short = [t.short for t in Tag]
    w.writerows(
        (pid, fs_to_decimal(te), ls, fs_to_decimal(lt), rs, fs_to_decimal(rt), short[tg])
        for pid, te, ls, lt, rs, rt, tg in zip(
            stream.pair_id.tolist(),
            stream.t_emit.tolist(),
            stream.left_sign.tolist(),
            stream.left_t.tolist(),
            stream.right_sign.tolist(),
            stream.right_t.tolist(),
            tags.tolist(),
        )
    )


def read_events(fh) -> list[dict]:
    lines = (line for line in fh if not line.startswith("#"))
    return list(csv.DictReader(lines))


def events_text(stream: EventStream, **kwargs) -> str:
    buf = io.StringIO()
    write_events(stream, buf, **kwargs)
    return buf.getvalue()
