"""Ideal quantum predictions for the Franson two-photon interferometer.

A joint table is a ``(4, 4)`` float array indexed by ``(left Label, right
Label)`` in the order (+E, -E, +L, -L).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .model import LABEL_SIGN, LABEL_TIMING, LABELS, Settings, Timing

BASIS = ("SS", "SL", "LS", "LL")


@dataclass(frozen=True)
class TwoPhotonState:
    """Amplitudes over (SS, SL, LS, LL) right before the exit beamsplitters."""

    amplitudes: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def make_state(settings: Settings) -> TwoPhotonState:
    e1 = np.exp(1j * settings.phi1)
    e2 = np.exp(1j * settings.phi2)
    return TwoPhotonState(0.5 * np.array([1.0, e2, e1, e1 * e2], dtype=complex))


def coincident_component_norm(state: TwoPhotonState) -> float:
    """Norm of the short-short plus long-long part of the state."""
    a = state.amplitudes
    return math.sqrt(abs(a[0]) ** 2 + abs(a[3]) ** 2)


def coincidence_prob(l: int, m: int, settings: Settings) -> float:
    """P(l; m, coincidence), summed over the EE and LL timing classes."""
    _check_sign(l)
    _check_sign(m)
    return (1.0 + l * m * math.cos(settings.psi)) / 8.0


def noncoincidence_prob(l: int, timing_l: Timing, m: int, timing_m: Timing) -> float:
    _check_sign(l)
    _check_sign(m)
    if Timing(timing_l) == Timing(timing_m):
        raise ValueError("equal timings are coincident events; use coincidence_prob")
    return 1.0 / 16.0


def singles_prob(l: int) -> float:
    _check_sign(l)
    return 0.5


def quantum_joint_table(settings: Settings) -> np.ndarray:
    c = math.cos(settings.psi)
    table = np.empty((4, 4))
    for a in LABELS:
        for b in LABELS:
            if a.timing == b.timing:
                table[a, b] = (1.0 + a.sign * b.sign * c) / 16.0
            else:
                table[a, b] = 1.0 / 16.0
    return table


def postselected_correlation(settings: Settings) -> float:
    return math.cos(settings.psi)


def all_events_correlation(settings: Settings) -> float:
    return 0.5 * math.cos(settings.psi)


_LM = np.outer(LABEL_SIGN, LABEL_SIGN).astype(float)
_SAME_TIMING = np.equal.outer(LABEL_TIMING, LABEL_TIMING)


def table_correlations(table: np.ndarray) -> tuple[float, float]:
    """(postselected, all-events) sign correlations of a probability or count table."""
    table = np.asarray(table, dtype=float)
    total = table.sum()
    coinc = table[_SAME_TIMING].sum()
    post = float((_LM * table)[_SAME_TIMING].sum() / coinc) if coinc > 0 else float("nan")
    every = float((_LM * table).sum() / total) if total > 0 else float("nan")
    return post, every


def coincident_fraction(table: np.ndarray) -> float:
    table = np.asarray(table, dtype=float)
    return float(table[_SAME_TIMING].sum() / table.sum())


def chsh_settings(angles: Sequence[float]) -> list[Settings]:
    """Setting pairs (a,b), (a,b'), (a',b), (a',b') for angles (a, a', b, b')."""
    a, a2, b, b2 = angles
    return [Settings(a, b), Settings(a, b2), Settings(a2, b), Settings(a2, b2)]


def chsh_combine(correlations: Sequence[float]) -> float:
    e_ab, e_ab2, e_a2b, e_a2b2 = correlations
    return abs(e_ab + e_ab2 + e_a2b - e_a2b2)


def chsh(angles: Sequence[float], correlation_fn: Callable[[Settings], float]) -> float:
    return chsh_combine([correlation_fn(s) for s in chsh_settings(angles)])


def _check_sign(x: int) -> None:
    if x not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {x!r}")
