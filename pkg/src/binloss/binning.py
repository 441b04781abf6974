"""Binning schemes, the binning operator and its weighted pseudoinverse.

Functions on attribute space are carried as arrays of values at the nodes of
a :class:`~binloss.quadrature.NodeRule`; binned vectors are length-``M``
arrays.  With ``gbar`` the mean data function sampled at the nodes, the
binning operator ``B`` integrates per bin, its ordinary adjoint spreads a
bin vector back as a piecewise constant, and the pseudoinverse between the
``1/gbar``-weighted spaces is

    B+ g = gbar * sum_m (g_m / gbar_m) b_m,

so ``gamma_1 = B+ B gamma`` is the part of ``gamma`` the bins can see and
``gamma_0 = gamma - gamma_1`` is its null component.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyBinError, InputError, PartitionError, ShapeError
from .model import AttributeSpace, ParametricModel, evaluate_on_rule

__all__ = [
    "BinningScheme",
    "PartitionReport",
    "uniform_grid",
    "explicit_scheme",
    "bin_index",
    "verify_partition",
    "apply_binning",
    "apply_binning_adjoint",
    "bin_means",
    "bin_means_from_nodes",
    "pseudoinverse",
    "decompose",
    "project_component",
    "weighted_inner",
    "data_inner",
]

_VOLUME_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class BinningScheme:
    """``M`` axis-aligned cells, ``lower[m] <= a < upper[m]`` (closed at the space's upper faces).

    ``counts`` is set for uniform grids; cell ``m`` is then the C-order
    ravel of its per-axis grid index.
    """

    space: AttributeSpace
    lower: np.ndarray
    upper: np.ndarray
    counts: tuple[int, ...] | None = None
    edges: tuple[np.ndarray, ...] | None = field(default=None, repr=False)

    @property
    def n_bins(self) -> int:
        return self.lower.shape[0]

    @property
    def volumes(self) -> np.ndarray:
        return np.prod(self.upper - self.lower, axis=1)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def check_partition(self) -> None:
        """Raise :class:`PartitionError` unless the cells tile the space."""
        if self.counts is not None:
            return
        total = float(np.sum(self.volumes))
        vol = self.space.volume
        pairs = _overlap_pairs(self.lower, self.upper)
        if pairs:
            raise PartitionError(f"scheme does not partition space: overlapping cells {pairs[:5]}")
        if abs(total - vol) > _VOLUME_RTOL * vol:
            raise PartitionError(
                f"scheme does not partition space: cell volumes sum to {total!r}, space volume {vol!r}"
            )


def uniform_grid(space: AttributeSpace, counts) -> BinningScheme:
    """Regular grid with ``counts[i]`` equal cells along axis ``i``.

    In one dimension the cell centres are ``lower + (m + 1/2) * dx``.
    """
    counts = tuple(int(c) for c in np.atleast_1d(counts))
    if len(counts) != space.dim:
        raise InputError(f"need {space.dim} per-axis counts, got {len(counts)}")
    if any(c < 1 for c in counts):
        raise InputError("bin counts must be >= 1")
    edges = []
    for lo, hi, n in zip(space.lower, space.upper, counts):
        e = lo + (hi - lo) * np.arange(n + 1) / n
        e[0], e[-1] = lo, hi
        e.setflags(write=False)
        edges.append(e)
    idx = np.indices(counts).reshape(len(counts), -1).T
    lower = np.column_stack([edges[j][idx[:, j]] for j in range(space.dim)])
    upper = np.column_stack([edges[j][idx[:, j] + 1] for j in range(space.dim)])
    return BinningScheme(space, lower, upper, counts, tuple(edges))


def explicit_scheme(space: AttributeSpace, lower, upper, check: bool = True) -> BinningScheme:
    """Scheme from explicit cell bounds, shape ``(M, q)`` each."""
    lower = np.atleast_2d(np.asarray(lower, dtype=float))
    upper = np.atleast_2d(np.asarray(upper, dtype=float))
    if space.dim == 1 and lower.shape[0] == 1 and lower.shape[1] != 1:
        lower, upper = lower.T, upper.T
    if lower.shape != upper.shape or lower.shape[1] != space.dim:
        raise ShapeError(f"cell bounds must both be (M, {space.dim})")
    if np.any(upper <= lower):
        raise InputError("every cell needs upper > lower")
    if np.any(lower < space.lower) or np.any(upper > space.upper):
        raise PartitionError("cell extends outside the attribute space")
    scheme = BinningScheme(space, lower, upper)
    if check:
        scheme.check_partition()
    return scheme


def _overlap_pairs(lower, upper) -> list[tuple[int, int]]:
    lo = np.maximum(lower[:, None, :], lower[None, :, :])
    hi = np.minimum(upper[:, None, :], upper[None, :, :])
    vol = np.prod(np.clip(hi - lo, 0.0, None), axis=2)
    np.fill_diagonal(vol, 0.0)
    i, j = np.nonzero(np.triu(vol > 0))
    return list(zip(i.tolist(), j.tolist()))


def _containment(scheme: BinningScheme, pts: np.ndarray) -> np.ndarray:
    """Boolean ``(n, M)``: does cell ``m`` own point ``n``."""
    top = scheme.space.upper
    ge = pts[:, None, :] >= scheme.lower[None]
    lt = pts[:, None, :] < scheme.upper[None]
    closed = (pts[:, None, :] == scheme.upper[None]) & (scheme.upper[None] == top)
    return np.all(ge & (lt | closed), axis=2)


def bin_index(scheme: BinningScheme, a) -> np.ndarray | int:
    """Index of the cell owning each point (0-based).

    Cells are half-open ``[lower, upper)``; a point on the space's upper
    face belongs to the last cell along that axis.  Returns an ``int`` for a
    single point, otherwise an integer array.
    """
    a_arr = np.asarray(a, dtype=float)
    single = a_arr.ndim == 0 or (a_arr.ndim == 1 and scheme.space.dim > 1)
    pts = scheme.space.check_inside(a_arr)
    if scheme.edges is not None:
        idx = []
        for j, (e, n) in enumerate(zip(scheme.edges, scheme.counts)):
            idx.append(np.searchsorted(e[1:-1], pts[:, j], side="right"))
        out = np.ravel_multi_index(tuple(idx), scheme.counts)
    else:
        own = _containment(scheme, pts)
        hit = own.any(axis=1)
        if not np.all(hit):
            raise PartitionError(f"point not covered by any bin: {pts[np.argmin(hit)].tolist()}")
        out = np.argmax(own, axis=1)
    out = np.asarray(out, dtype=np.intp)
    return int(out[0]) if single else out


@dataclass
class PartitionReport:
    ok: bool
    volume_sum: float
    space_volume: float
    overlapping_cells: list[tuple[int, int]]
    uncovered_samples: np.ndarray
    multiply_covered_samples: np.ndarray

    def __bool__(self):
        return self.ok


def verify_partition(scheme: BinningScheme, n_samples: int = 10_000, seed: int = 0) -> PartitionReport:
    """Check that the cells tile the space.

    Samples uniform points and counts owning cells per point, compares the
    cell-volume sum against the space volume, and lists overlapping cell
    pairs.  Never raises on a bad scheme; inspect ``report.ok``.
    """
    if n_samples < 1:
        raise InputError("n_samples must be >= 1")
    sp = scheme.space
    rng = np.random.default_rng(seed)
    pts = sp.lower + rng.random((n_samples, sp.dim)) * sp.widths
    hits = _containment(scheme, pts).sum(axis=1)
    total = float(np.sum(scheme.volumes))
    pairs = [] if scheme.counts is not None else _overlap_pairs(scheme.lower, scheme.upper)
    uncovered = pts[hits == 0]
    multiple = pts[hits > 1]
    ok = (
        abs(total - sp.volume) <= _VOLUME_RTOL * sp.volume
        and not pairs
        and uncovered.shape[0] == 0
        and multiple.shape[0] == 0
    )
    return PartitionReport(ok, total, sp.volume, pairs, uncovered, multiple)


def _check_rule(scheme: BinningScheme, rule) -> None:
    if rule.n_bins != scheme.n_bins:
        raise ShapeError(f"rule has {rule.n_bins} bins, scheme has {scheme.n_bins}")


def _node_values(rule, values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape[0] != rule.n_nodes:
        raise ShapeError(f"expected {rule.n_nodes} node values, got {values.shape[0]}")
    return values


def apply_binning(scheme: BinningScheme, rule, gamma) -> np.ndarray:
    """``(B gamma)_m``, the integral of ``gamma`` over cell ``m``."""
    _check_rule(scheme, rule)
    return rule.integrate_per_bin(_node_values(rule, gamma))


def apply_binning_adjoint(scheme: BinningScheme, g, rule) -> np.ndarray:
    """``sum_m g_m b_m(a)`` sampled at the nodes (unweighted adjoint)."""
    _check_rule(scheme, rule)
    g = np.asarray(g, dtype=float)
    if g.shape[0] != scheme.n_bins:
        raise ShapeError(f"binned vector has length {g.shape[0]}, scheme has {scheme.n_bins} bins")
    return g[rule.bin_of_node]


def bin_means_from_nodes(gbar, rule) -> np.ndarray:
    means = rule.integrate_per_bin(_node_values(rule, gbar))
    bad = np.flatnonzero(~(means > 0))
    if bad.size:
        raise EmptyBinError(bad)
    return means


def bin_means(model: ParametricModel, theta, scheme: BinningScheme, rule) -> np.ndarray:
    """Expected counts per bin, ``gbar_m(theta)``."""
    _check_rule(scheme, rule)
    gbar, _ = evaluate_on_rule(model, theta, rule)
    return bin_means_from_nodes(gbar, rule)


def pseudoinverse(g, gbar, gbar_bins, rule) -> np.ndarray:
    """``B+ g`` as node values, for the ``1/gbar`` and ``1/gbar_m`` weighted spaces."""
    g = np.asarray(g, dtype=float)
    return _node_values(rule, gbar) * (g / gbar_bins)[rule.bin_of_node]


def decompose(gamma, gbar, rule, gbar_bins=None) -> tuple[np.ndarray, np.ndarray]:
    """Split node function ``gamma`` into ``(gamma_1, gamma_0)`` with ``gamma_1 = B+ B gamma``."""
    gamma = _node_values(rule, gamma)
    if gbar_bins is None:
        gbar_bins = bin_means_from_nodes(gbar, rule)
    gamma1 = pseudoinverse(rule.integrate_per_bin(gamma), gbar, gbar_bins, rule)
    return gamma1, gamma - gamma1


def project_component(gamma, model: ParametricModel, theta, scheme: BinningScheme, rule):
    """Decompose ``gamma`` into its binned-visible and null parts under ``gbar(. | theta)``."""
    _check_rule(scheme, rule)
    gbar, _ = evaluate_on_rule(model, theta, rule)
    return decompose(gamma, gbar, rule)


def weighted_inner(u, v, gbar, rule) -> float:
    """``integral u v / gbar`` on the rule."""
    return rule.integrate(_node_values(rule, u) * _node_values(rule, v) / gbar)


def data_inner(g, h, gbar_bins) -> float:
    return float(np.sum(np.asarray(g) * np.asarray(h) / gbar_bins))
