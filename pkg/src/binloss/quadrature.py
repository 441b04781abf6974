"""Per-bin Gauss-Legendre tensor rules.

Nodes are laid out bin by bin so that no node sits on a cell boundary and
every integral splits exactly into per-bin pieces.  ``integrate`` is defined
as the sum of ``integrate_per_bin``, which makes partition identities such as
``sum_m gbar_m == N`` hold bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .binning import BinningScheme, bin_index
from .errors import InputError, PartitionError, ShapeError
from .model import AttributeSpace

__all__ = ["NodeRule", "build_rule", "rebin_rule", "integrate", "integrate_per_bin", "reference_rule"]

DEFAULT_NODES_PER_AXIS = 4


@dataclass(frozen=True, eq=False)
class NodeRule:
    """Quadrature nodes and weights, each node assigned to one bin.

    Rules from :func:`build_rule` are bin-major with ``order**q`` nodes per
    bin; :func:`rebin_rule` reuses the same nodes for a coarser scheme.
    """

    nodes: np.ndarray        # (n_nodes, q)
    weights: np.ndarray      # (n_nodes,)
    bin_of_node: np.ndarray  # (n_nodes,)
    order: int               # nodes per axis per cell of the scheme the rule was built on
    n_bins: int

    def __post_init__(self):
        bins = np.asarray(self.bin_of_node)
        if bins.shape != self.weights.shape or self.nodes.shape[0] != self.weights.size:
            raise ShapeError("nodes, weights and bin_of_node disagree in length")
        if not np.all(self.weights > 0):
            raise InputError("quadrature weights must be positive")
        counts = np.bincount(bins, minlength=self.n_bins)
        if counts.size != self.n_bins or np.any(counts == 0):
            raise InputError("every bin needs at least one node")
        perm = None if np.all(np.diff(bins) >= 0) else np.argsort(bins, kind="stable")
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        object.__setattr__(self, "_perm", perm)
        object.__setattr__(self, "_starts", starts)

    @property
    def n_nodes(self) -> int:
        return self.weights.size

    @property
    def degree(self) -> int:
        """Per-axis polynomial degree integrated exactly on each cell."""
        return 2 * self.order - 1

    def integrate_per_bin(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.shape[:1] != (self.n_nodes,):
            raise ShapeError(f"expected {self.n_nodes} node values, got shape {values.shape}")
        w = self.weights.reshape((self.n_nodes,) + (1,) * (values.ndim - 1))
        wv = w * values
        if self._perm is not None:
            wv = wv[self._perm]
        return np.add.reduceat(wv, self._starts, axis=0)

    def integrate(self, values):
        per_bin = self.integrate_per_bin(values)
        out = per_bin.sum(axis=0)
        return float(out) if np.ndim(out) == 0 else out


def reference_rule(nodes_per_axis: int, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss-Legendre rule on the unit cube ``[0, 1]^dim``."""
    x, w = leggauss(nodes_per_axis)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    wgrids = np.meshgrid(*([w] * dim), indexing="ij")
    pts = np.column_stack([g.ravel() for g in grids])
    wts = np.prod(np.column_stack([g.ravel() for g in wgrids]), axis=1)
    return pts, wts


def build_rule(space: AttributeSpace, scheme: BinningScheme,
               nodes_per_axis: int = DEFAULT_NODES_PER_AXIS) -> NodeRule:
    """Place a tensor Gauss-Legendre rule inside every cell of ``scheme``.

    The result has ``M * nodes_per_axis**q`` nodes, ordered bin-major.
    """
    nodes_per_axis = int(nodes_per_axis)
    if nodes_per_axis < 1:
        raise InputError("nodes_per_axis must be >= 1")
    if scheme.space != space:
        raise InputError("scheme was built for a different attribute space")
    scheme.check_partition()
    ref_x, ref_w = reference_rule(nodes_per_axis, space.dim)
    size = scheme.upper - scheme.lower
    nodes = scheme.lower[:, None, :] + ref_x[None, :, :] * size[:, None, :]
    weights = ref_w[None, :] * scheme.volumes[:, None]
    n = ref_w.size
    bins = np.repeat(np.arange(scheme.n_bins), n)
    for arr in (nodes, weights, bins):
        arr.setflags(write=False)
    return NodeRule(
        nodes=nodes.reshape(-1, space.dim),
        weights=weights.ravel(),
        bin_of_node=bins,
        order=nodes_per_axis,
        n_bins=scheme.n_bins,
    )


def integrate(rule: NodeRule, values) -> float:
    """``sum_i w_i v_i``."""
    return rule.integrate(values)


def integrate_per_bin(rule: NodeRule, values) -> np.ndarray:
    return rule.integrate_per_bin(values)


def rebin_rule(rule: NodeRule, scheme: BinningScheme) -> NodeRule:
    """Reassign the nodes of ``rule`` to the cells of a coarser ``scheme``.

    Every cell of the rule's own scheme must lie inside one cell of
    ``scheme`` (nested grids); all integrals then share one node set.
    """
    new_bins = np.asarray(bin_index(scheme, rule.nodes)).reshape(-1)
    lo = np.full(rule.n_bins, np.iinfo(np.intp).max)
    hi = np.full(rule.n_bins, -1)
    np.minimum.at(lo, rule.bin_of_node, new_bins)
    np.maximum.at(hi, rule.bin_of_node, new_bins)
    if np.any(lo != hi):
        raise PartitionError("scheme is not refined by the rule's cells")
    new_bins.setflags(write=False)
    return NodeRule(rule.nodes, rule.weights, new_bins, rule.order, scheme.n_bins)
