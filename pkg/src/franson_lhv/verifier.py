"""Numerical checks that the hidden-variable charts reproduce the quantum table.

Two independent routes:

* quadrature -- at fixed ``phi`` the joint measure in ``r`` is an exact
  interval intersection; the ``phi`` integral is done with composite
  Gauss-Legendre on panels split at every angle where a chart boundary has a
  kink, so each panel integrand is smooth;
* Monte Carlo -- sample ``(phi, r)`` pairs and tabulate ``respond_pair``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import rng as rngmod
from .model import (
    LABELS,
    LEFT_CHART,
    RIGHT_CHART,
    TWO_PI,
    Label,
    Settings,
    reduce_angles,
    respond_arrays,
)
from .quantum import quantum_joint_table, table_correlations

QUAD_TARGET = 1e-9
VERIFY_TOLERANCE = 1e-8
DEFAULT_ORDER = 12
DEFAULT_MAX_SUBPANELS = 64


class QuadratureError(ArithmeticError):
    """The quadrature error estimate did not reach its target within budget."""

    def __init__(self, estimate: float, target: float, subpanels: int):
        super().__init__(
            f"quadrature did not converge: error estimate {estimate:.3e} > target {target:.3e} "
            f"at {subpanels} subpanels per panel"
        )
        self.estimate = estimate
        self.target = target
        self.subpanels = subpanels


@lru_cache(maxsize=None)
def _gauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def overlap_measures(left_chart, right_chart, settings: Settings, phi: np.ndarray) -> np.ndarray:
    """r-measure of each (left label, right label) region at every ``phi``.

    Returns an array of shape ``(16, len(phi))``; row ``4*a + b``.
    """
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    llo, lhi, llab = left_chart.section_table(reduce_angles(phi - settings.phi1))
    rlo, rhi, rlab = right_chart.section_table(reduce_angles(phi + settings.phi2))
    ov = np.minimum(lhi[:, None, :], rhi[None, :, :]) - np.maximum(llo[:, None, :], rlo[None, :, :])
    ov = np.clip(ov, 0.0, None)
    idx = 4 * llab[:, None, :].astype(np.intp) + rlab[None, :, :].astype(np.intp)
    cols = np.broadcast_to(np.arange(phi.size), idx.shape)
    out = np.zeros((16, phi.size))
    np.add.at(out, (idx.ravel(), cols.ravel()), ov.ravel())
    return out


def breakpoints(left_chart, right_chart, settings: Settings) -> np.ndarray:
    """Panel edges in ``phi`` over ``[0, 2pi]``: images of both charts' kinks."""
    pts = [k + settings.phi1 for k in left_chart.kinks()]
    pts += [k - settings.phi2 for k in right_chart.kinks()]
    pts = np.sort(np.concatenate([[0.0, TWO_PI], reduce_angles(np.array(pts))]))
    keep = np.concatenate([[True], np.diff(pts) > 1e-13])
    pts = pts[keep]
    pts[-1] = TWO_PI
    return pts


def _composite(fn, edges: np.ndarray, subpanels: int, order: int) -> np.ndarray:
    x, w = _gauss(order)
    fine = np.concatenate(
        [np.linspace(a, b, subpanels + 1)[:-1] for a, b in zip(edges[:-1], edges[1:])] + [edges[-1:]]
    )
    half = 0.5 * np.diff(fine)
    centre = 0.5 * (fine[:-1] + fine[1:])
    nodes = (centre[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return fn(nodes) @ weights


def joint_table_numeric(
    settings: Settings,
    left_chart=LEFT_CHART,
    right_chart=RIGHT_CHART,
    *,
    target: float = QUAD_TARGET,
    order: int = DEFAULT_ORDER,
    max_subpanels: int = DEFAULT_MAX_SUBPANELS,
) -> tuple[np.ndarray, float]:
    """All 16 joint probabilities by quadrature, with the error estimate.

    Subpanels are doubled until successive estimates agree to ``target``;
    raises :class:`QuadratureError` if that needs more than ``max_subpanels``.
    """
    edges = breakpoints(left_chart, right_chart, settings)

    def fn(phi):
        return overlap_measures(left_chart, right_chart, settings, phi)

    m = 1
    est = float("inf")
    prev = _composite(fn, edges, m, order)
    while True:
        if 2 * m > max_subpanels:
            raise QuadratureError(est, target, m)
        m *= 2
        cur = _composite(fn, edges, m, order)
        est = float(np.max(np.abs(cur - prev))) / TWO_PI
        if est <= target:
            return cur.reshape(4, 4) / TWO_PI, est
        prev = cur


def joint_prob_numeric(
    left_chart,
    right_chart,
    settings: Settings,
    a: Label,
    b: Label,
    **quad,
) -> float:
    table, _ = joint_table_numeric(settings, left_chart, right_chart, **quad)
    return float(table[a, b])


@dataclass
class VerificationReport:
    psi: np.ndarray
    numeric: np.ndarray
    reference: np.ndarray
    tolerance: float
    quad_error: float
    chart: str = "left"
    settings: list[Settings] = field(default_factory=list)

    @property
    def deviation(self) -> np.ndarray:
        return np.abs(self.numeric - self.reference)

    @property
    def max_deviation(self) -> float:
        return float(self.deviation.max())

    @property
    def worst(self) -> tuple[float, Label, Label, float]:
        g, a, b = np.unravel_index(np.argmax(self.deviation), self.deviation.shape)
        return float(self.psi[g]), Label(int(a)), Label(int(b)), float(self.deviation[g, a, b])

    @property
    def left_marginals(self) -> np.ndarray:
        return self.numeric.sum(axis=2)

    @property
    def right_marginals(self) -> np.ndarray:
        return self.numeric.sum(axis=1)

    @property
    def marginal_deviation(self) -> float:
        return float(
            max(
                np.abs(self.left_marginals - 0.25).max(),
                np.abs(self.right_marginals - 0.25).max(),
            )
        )

    @property
    def passed(self) -> bool:
        return self.max_deviation < self.tolerance and self.marginal_deviation < self.tolerance

    def to_dict(self) -> dict:
        psi, a, b, dev = self.worst
        return {
            "passed": self.passed,
            "chart": self.chart,
            "tolerance": self.tolerance,
            "grid_size": int(self.psi.size),
            "max_deviation": self.max_deviation,
            "marginal_deviation": self.marginal_deviation,
            "quadrature_error_estimate": self.quad_error,
            "worst": {"psi": psi, "left": str(a), "right": str(b), "deviation": dev},
            "labels": [str(lab) for lab in LABELS],
            "points": [
                {
                    "psi": float(p),
                    "phi1": s.phi1,
                    "phi2": s.phi2,
                    "numeric": self.numeric[i].tolist(),
                    "reference": self.reference[i].tolist(),
                    "max_deviation": float(self.deviation[i].max()),
                }
                for i, (p, s) in enumerate(zip(self.psi, self.settings))
            ],
        }

    def to_text(self) -> str:
        psi, a, b, dev = self.worst
        lines = [
            f"chart verification ({self.chart}): {'PASS' if self.passed else 'FAIL'}",
            f"  grid points        {self.psi.size}",
            f"  tolerance          {self.tolerance:.1e}",
            f"  max deviation      {self.max_deviation:.3e}",
            f"  marginal deviation {self.marginal_deviation:.3e}",
            f"  quadrature error   {self.quad_error:.3e}",
            f"  worst entry        ({a}, {b}) at psi={psi:.6f}: {dev:.3e}",
        ]
        return "\n".join(lines)


def verify_charts(
    psi_grid: Sequence[float],
    tolerance: float = VERIFY_TOLERANCE,
    *,
    left_chart=LEFT_CHART,
    right_chart=RIGHT_CHART,
    split: float = 0.5,
    order: int = DEFAULT_ORDER,
    max_subpanels: int = DEFAULT_MAX_SUBPANELS,
    target: float | None = None,
) -> VerificationReport:
    """Compare quadrature tables with the quantum table on a grid of phase sums.

    Each ``psi`` is realised as ``Settings.from_psi(psi, split)``.
    """
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    if target is None:
        target = min(QUAD_TARGET, tolerance / 10.0)
    psi = np.asarray(list(psi_grid), dtype=float)
    settings = [Settings.from_psi(p, split) for p in psi]
    numeric = np.empty((psi.size, 4, 4))
    reference = np.empty_like(numeric)
    worst_err = 0.0
    for i, s in enumerate(settings):
        numeric[i], err = joint_table_numeric(
            s, left_chart, right_chart, target=target, order=order, max_subpanels=max_subpanels
        )
        reference[i] = quantum_joint_table(s)
        worst_err = max(worst_err, err)
    return VerificationReport(
        psi=psi,
        numeric=numeric,
        reference=reference,
        tolerance=tolerance,
        quad_error=worst_err,
        chart=getattr(left_chart, "name", "left"),
        settings=settings,
    )


def psi_grid(size: int) -> np.ndarray:
    """``size`` equally spaced phase sums covering ``[0, 2pi]``; ``[0]`` if size is 1."""
    if size < 1:
        raise ValueError("grid size must be at least 1")
    if size == 1:
        return np.array([0.0])
    return np.linspace(0.0, TWO_PI, size)


def _mc_block(seed, run, block, size, settings, left_chart, right_chart):
    g = rngmod.block_rng(seed, rngmod.PURPOSE_MC, run, block)
    phi = g.uniform(0.0, TWO_PI, size)
    r = g.random(size)
    left, right = respond_arrays(phi, r, settings, left_chart, right_chart)
    return np.bincount(4 * left.astype(np.intp) + right, minlength=16)


def mc_counts(
    settings: Settings,
    n: int,
    seed: int,
    *,
    run: int = 0,
    workers: int = 1,
    left_chart=LEFT_CHART,
    right_chart=RIGHT_CHART,
) -> np.ndarray:
    """Integer ``(4, 4)`` count table from ``n`` uniformly drawn hidden variables."""
    if n < 1:
        raise ValueError("n must be at least 1")
    sizes = rngmod.block_sizes(n)
    jobs = [(seed, run, k, size, settings, left_chart, right_chart) for k, size in enumerate(sizes)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda args: _mc_block(*args), jobs))
    else:
        parts = [_mc_block(*args) for args in jobs]
    return np.sum(parts, axis=0).reshape(4, 4)


def mc_joint_table(settings: Settings, n: int, seed: int, **kwargs) -> tuple[np.ndarray, np.ndarray]:
    """Frequency table and per-entry binomial standard errors."""
    counts = mc_counts(settings, n, seed, **kwargs)
    p = counts / n
    return p, np.sqrt(p * (1.0 - p) / n)


def mc_correlation(settings: Settings, n: int, seed: int, **kwargs) -> dict:
    """Postselected and all-events correlations estimated by Monte Carlo."""
    counts = mc_counts(settings, n, seed, **kwargs)
    post, every = table_correlations(counts)
    n_coinc = counts[np.equal.outer([0, 0, 1, 1], [0, 0, 1, 1])].sum()
    return {
        "postselected": post,
        "postselected_se": math.sqrt(max(1.0 - post**2, 0.0) / n_coinc) if n_coinc else float("nan"),
        "all_events": every,
        "all_events_se": math.sqrt(max(1.0 - every**2, 0.0) / n),
        "coincident": int(n_coinc),
        "n": int(n),
    }
