"""Object-reconstruction variant: a linear system operator in place of theta.

The object ``f`` is a vector of samples on an :class:`ObjectGrid`; the
system operator maps it to the mean data function at the quadrature nodes,
``gbar = L f``.  A perturbation ``df`` plays the role of ``dtheta . grad``,
so the binning loss along ``df`` follows from ``gamma = L df`` with the same
machinery as the parametric case.  The binned system is ``H = B L``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .binning import BinningScheme, _check_rule, bin_means_from_nodes, decompose
from .errors import EmptyBinError, InputError, NonpositiveDensityError, ShapeError, ZeroPerturbationError
from .fisher import LossReport, loss_from_node_functions
from .model import gaussian_sum

__all__ = [
    "ObjectGrid",
    "PsfSpec",
    "SystemOperator",
    "bandlimited_psf_values",
    "psf_values",
    "build_convolution_operator",
    "apply_system",
    "binned_system",
    "fim_object",
    "loss_object",
    "equality_residual",
    "object_from_bumps",
]


@dataclass(frozen=True)
class ObjectGrid:
    """``n_points`` cell-centred samples covering ``[lower, upper]``."""

    lower: float
    upper: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 2:
            raise InputError("object grid needs at least 2 points")
        if not self.upper > self.lower:
            raise InputError("object grid needs upper > lower")

    @property
    def spacing(self) -> float:
        return (self.upper - self.lower) / self.n_points

    @property
    def points(self) -> np.ndarray:
        return self.lower + (np.arange(self.n_points) + 0.5) * self.spacing


@dataclass(frozen=True)
class PsfSpec:
    """Point spread function.

    ``kind="gaussian"`` uses ``width`` as the standard deviation;
    ``kind="bandlimited-sinc"`` uses ``bandwidth`` ``B`` with
    ``p(x) = B sinc(B x)``, whose spectrum is flat on ``[-B/2, B/2]``.
    Both have area ``scale``.
    """

    kind: str
    width: float | None = None
    bandwidth: float | None = None
    scale: float = 1.0

    def __post_init__(self):
        if self.kind == "gaussian":
            if self.width is None or not self.width > 0:
                raise InputError("gaussian psf needs width > 0")
        elif self.kind == "bandlimited-sinc":
            if self.bandwidth is None or not self.bandwidth > 0:
                raise InputError("bandlimited-sinc psf needs bandwidth B > 0")
        else:
            raise InputError(f"unknown psf kind {self.kind!r}")


def bandlimited_psf_values(bandwidth: float, x) -> np.ndarray | float:
    """``B sin(pi B x) / (pi B x)``, equal to ``B`` at ``x = 0``."""
    if not bandwidth > 0:
        raise InputError("bandwidth must be positive")
    out = bandwidth * np.sinc(bandwidth * np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def psf_values(psf: PsfSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if psf.kind == "gaussian":
        w = psf.width
        return psf.scale * np.exp(-0.5 * (x / w) ** 2) / (np.sqrt(2 * np.pi) * w)
    return psf.scale * bandlimited_psf_values(psf.bandwidth, x)


@dataclass(frozen=True, eq=False)
class SystemOperator:
    """``kernel[i, k]`` maps object sample ``k`` to the density at node ``i``."""

    kernel: np.ndarray
    grid: ObjectGrid

    @property
    def shape(self) -> tuple[int, int]:
        return self.kernel.shape


def build_convolution_operator(psf: PsfSpec, object_grid: ObjectGrid, rule) -> SystemOperator:
    """Discretised convolution ``(p * f)(x_i) ~ sum_k p(x_i - r_k) f_k dr``.

    Only one-dimensional attribute spaces are supported.  The object
    integral is truncated to the object grid's support.
    """
    if rule.nodes.shape[1] != 1:
        raise ShapeError("dimension mismatch: convolution operator needs a 1-d attribute space")
    x = rule.nodes[:, 0]
    r = object_grid.points
    kernel = psf_values(psf, x[:, None] - r[None, :]) * object_grid.spacing
    kernel.setflags(write=False)
    return SystemOperator(kernel, object_grid)


def _object_vector(op: SystemOperator, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (op.kernel.shape[1],):
        raise ShapeError(f"object must have {op.kernel.shape[1]} samples, got {f.shape}")
    if not np.all(np.isfinite(f)):
        raise InputError("object values must be finite")
    return f


def apply_system(op: SystemOperator, f, rule=None, require_positive: bool = False) -> np.ndarray:
    """``L f`` at the nodes.

    With ``require_positive`` the result is validated as a mean data
    function; ``rule`` is then used to report the offending node.
    """
    gbar = op.kernel @ _object_vector(op, f)
    if require_positive:
        bad = ~(gbar > 0)
        if np.any(bad):
            i = int(np.argmax(bad))
            loc = rule.nodes[i].tolist() if rule is not None else i
            raise NonpositiveDensityError(loc, float(gbar[i]))
    return gbar


def binned_system(op: SystemOperator, scheme: BinningScheme, rule) -> np.ndarray:
    """``H = B L`` as an ``(M, K)`` matrix."""
    _check_rule(scheme, rule)
    if op.kernel.shape[0] != rule.n_nodes:
        raise ShapeError("operator rows do not match the rule's nodes")
    return rule.integrate_per_bin(op.kernel)


def fim_object(op: SystemOperator, scheme: BinningScheme, rule, f) -> tuple[np.ndarray, np.ndarray]:
    """List-mode and binned Fisher matrices over the object samples."""
    gbar = apply_system(op, f, rule, require_positive=True)
    h = binned_system(op, scheme, rule)
    hf = h @ np.asarray(f, dtype=float)
    bad = np.flatnonzero(~(hf > 0))
    if bad.size:
        raise EmptyBinError(bad)
    f_lm = rule.integrate(op.kernel[:, :, None] * op.kernel[:, None, :] / gbar[:, None, None])
    f_b = np.einsum("mi,mj,m->ij", h, h, 1.0 / hf)
    return 0.5 * (f_lm + f_lm.T), 0.5 * (f_b + f_b.T)


def _prepare(op, scheme, rule, f, df):
    _check_rule(scheme, rule)
    f = _object_vector(op, f)
    df = _object_vector(op, df)
    if not np.any(df != 0):
        raise ZeroPerturbationError()
    gbar = apply_system(op, f, rule, require_positive=True)
    gamma = op.kernel @ df
    h = binned_system(op, scheme, rule)
    hf = h @ f
    bad = np.flatnonzero(~(hf > 0))
    if bad.size:
        raise EmptyBinError(bad)
    return f, df, gbar, gamma, h, hf


def loss_object(op: SystemOperator, scheme: BinningScheme, rule, f, df) -> LossReport:
    """Binning loss for detecting the object change ``f -> f + df``.

    ``quadform_lm`` is ``integral (L df)^2 / L f`` and ``quadform_binned``
    is ``sum_m (H df)_m^2 / (H f)_m``.
    """
    f, df, gbar, gamma, h, hf = _prepare(op, scheme, rule, f, df)
    hdf = h @ df
    return loss_from_node_functions(
        gamma, gbar, rule,
        quadform_lm=rule.integrate(gamma * gamma / gbar),
        quadform_binned=float(np.sum(hdf * hdf / hf)),
        delta=df,
        gbar_bins=bin_means_from_nodes(gbar, rule),
    )


def equality_residual(op: SystemOperator, scheme: BinningScheme, rule, f, df) -> np.ndarray:
    """Null component ``(L df)_0`` at the nodes; zero exactly when binning loses nothing."""
    f, df, gbar, gamma, h, hf = _prepare(op, scheme, rule, f, df)
    _, gamma0 = decompose(gamma, gbar, rule)
    return gamma0


def object_from_bumps(grid: ObjectGrid, background: float = 0.0, bumps=()) -> np.ndarray:
    """Sample ``background + sum of Gaussian bumps`` on the object grid."""
    return gaussian_sum(grid.points, background, bumps)
