"""Sampling list-mode data from the Poisson point process with intensity ``gbar``.

Event counts are Poisson with mean ``N(theta)``; attributes are drawn by
rejection from a uniform proposal on the attribute box with a constant
envelope set to 1.2 times the largest node value of ``gbar``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .binning import BinningScheme, bin_index, bin_means
from .errors import EnvelopeExceededError, InputError
from .model import ParametricModel, evaluate_on_rule

__all__ = [
    "EventList",
    "MeanCheck",
    "sample_list",
    "bin_counts",
    "empirical_mean_check",
    "list_mode_log_likelihood",
    "write_events",
    "read_events",
]

ENVELOPE_HEADROOM = 1.2
_BATCH = 4096


@dataclass(frozen=True)
class EventList:
    events: np.ndarray  # (N, q)
    seed: object
    theta: np.ndarray

    def __len__(self):
        return self.events.shape[0]


def sample_list(model: ParametricModel, theta, rule, seed) -> EventList:
    """Draw one list-mode realisation.

    ``seed`` is anything :func:`numpy.random.default_rng` accepts; the same
    seed reproduces the same list.
    """
    theta = model.check_theta(theta)
    gbar, _ = evaluate_on_rule(model, theta, rule)
    n_mean = rule.integrate(gbar)
    envelope = ENVELOPE_HEADROOM * float(np.max(gbar))
    rng = np.random.default_rng(seed)
    n = int(rng.poisson(n_mean))
    sp = model.space
    out = np.empty((n, sp.dim))
    filled = 0
    while filled < n:
        prop = sp.lower + rng.random((_BATCH, sp.dim)) * sp.widths
        dens = np.asarray(model.mean(prop, theta), dtype=float)
        if np.any(dens > envelope):
            raise EnvelopeExceededError(float(np.max(dens)), envelope)
        keep = prop[rng.random(_BATCH) * envelope < dens]
        take = min(keep.shape[0], n - filled)
        out[filled:filled + take] = keep[:take]
        filled += take
    out.setflags(write=False)
    return EventList(out, seed, theta)


def bin_counts(events: EventList | np.ndarray, scheme: BinningScheme) -> np.ndarray:
    """``g_m``, the number of events falling in each cell."""
    ev = events.events if isinstance(events, EventList) else np.asarray(events, dtype=float)
    if ev.size == 0:
        return np.zeros(scheme.n_bins, dtype=np.int64)
    idx = np.atleast_1d(bin_index(scheme, ev.reshape(-1, scheme.space.dim)))
    return np.bincount(idx, minlength=scheme.n_bins).astype(np.int64)


@dataclass
class MeanCheck:
    expected: np.ndarray
    empirical: np.ndarray
    z: np.ndarray
    n_trials: int
    counts_conserved: bool
    gate: float = 5.0

    @property
    def max_abs_z(self) -> float:
        return float(np.max(np.abs(self.z)))

    @property
    def passed(self) -> bool:
        return self.counts_conserved and self.max_abs_z <= self.gate


def empirical_mean_check(model: ParametricModel, theta, scheme: BinningScheme, rule,
                         n_trials: int, seed: int, reference_theta=None,
                         gate: float = 5.0) -> MeanCheck:
    """Compare trial-averaged bin counts with ``gbar_m``.

    ``z_m = (mean(g_m) - gbar_m) / sqrt(gbar_m / n_trials)``.  Sampling uses
    ``theta``; the expected means use ``reference_theta`` when given (a
    negative control).  Trial ``t`` is seeded from ``SeedSequence(seed)``'s
    ``t``-th child.
    """
    if n_trials < 30:
        raise InputError("n_trials must be >= 30")
    theta = model.check_theta(theta)
    ref = theta if reference_theta is None else model.check_theta(reference_theta)
    expected = bin_means(model, ref, scheme, rule)
    children = np.random.SeedSequence(seed).spawn(n_trials)
    totals = np.zeros(scheme.n_bins, dtype=np.int64)
    conserved = True
    for child in children:
        ev = sample_list(model, theta, rule, child)
        g = bin_counts(ev, scheme)
        conserved &= int(g.sum()) == len(ev)
        totals += g
    empirical = totals / n_trials
    z = (empirical - expected) / np.sqrt(expected / n_trials)
    return MeanCheck(expected, empirical, z, n_trials, bool(conserved), gate)


def list_mode_log_likelihood(model: ParametricModel, theta, events: EventList | np.ndarray,
                             rule) -> float:
    """``log pr(A | theta)`` with the Poisson factor ``N^N exp(-N) / N!``.

    Equals ``-N(theta) + sum_n log gbar(a_n | theta) - log N!``.
    """
    theta = model.check_theta(theta)
    ev = events.events if isinstance(events, EventList) else np.asarray(events, dtype=float)
    pts = model.space.check_inside(ev.reshape(-1, model.space.dim)) if ev.size else ev.reshape(0, model.space.dim)
    n_mean = rule.integrate(evaluate_on_rule(model, theta, rule)[0])
    vals = np.asarray(model.mean(pts, theta), dtype=float) if pts.shape[0] else np.empty(0)
    return float(-n_mean + np.sum(np.log(vals)) - math.lgamma(pts.shape[0] + 1))


def write_events(path, events: EventList | np.ndarray) -> None:
    """One event per line, ``q`` whitespace-separated coordinates."""
    ev = events.events if isinstance(events, EventList) else np.asarray(events, dtype=float)
    np.savetxt(path, ev.reshape(ev.shape[0], -1), fmt="%.17g")


def read_events(path, dim: int = 1) -> np.ndarray:
    return np.loadtxt(path, ndmin=2).reshape(-1, dim)
