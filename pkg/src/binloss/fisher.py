"""List-mode and binned Fisher information, and the information lost by binning.

With ``gamma = dtheta . grad gbar`` the two quadratic forms are

    dtheta' F_LM dtheta = integral gamma^2 / gbar
    dtheta' F_B  dtheta = sum_m (B gamma)_m^2 / gbar_m

and their difference is computed three ways in :func:`loss_quadform`:
directly from the matrices, as the weighted norm of the null component
``gamma_0``, and as a sum of per-bin integrals of
``(gamma / gbar - (B gamma)_m / gbar_m)^2 gbar``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .binning import BinningScheme, bin_means_from_nodes, decompose, _check_rule
from .errors import InputError, ZeroPerturbationError
from .model import ParametricModel, evaluate_on_rule

__all__ = [
    "LossReport",
    "Detectability",
    "fim_list_mode",
    "fim_binned",
    "fim_difference",
    "loss_quadform",
    "loss_from_node_functions",
    "average_loss_trace",
    "average_loss_isotropic",
    "auc_from_detectability",
    "detectability_from_fim",
    "min_eigenvalue",
    "is_psd",
]

LOSS_RTOL = 1e-10
LOSS_ATOL = 1e-14


@dataclass
class LossReport:
    """Binning loss for one perturbation direction, by three routes."""

    quadform_lm: float
    quadform_binned: float
    loss_direct: float
    loss_null_norm: float
    loss_per_bin: np.ndarray
    delta: np.ndarray = field(repr=False)

    @property
    def loss_per_bin_total(self) -> float:
        return float(np.sum(self.loss_per_bin))

    @property
    def routes(self) -> tuple[float, float, float]:
        return self.loss_direct, self.loss_null_norm, self.loss_per_bin_total

    def max_disagreement(self) -> float:
        r = self.routes
        return max(abs(r[0] - r[1]), abs(r[0] - r[2]), abs(r[1] - r[2]))

    def routes_agree(self, rtol: float = LOSS_RTOL, atol: float = LOSS_ATOL) -> bool:
        """Pairwise agreement, relative to the larger loss, or absolute near zero."""
        scale = max(abs(x) for x in self.routes)
        return self.max_disagreement() <= max(rtol * scale, atol)

    def to_dict(self) -> dict:
        return {
            "delta": np.asarray(self.delta).tolist(),
            "quadform_lm": self.quadform_lm,
            "quadform_binned": self.quadform_binned,
            "loss_direct": self.loss_direct,
            "loss_null_norm": self.loss_null_norm,
            "loss_per_bin_total": self.loss_per_bin_total,
            "loss_per_bin": np.asarray(self.loss_per_bin).tolist(),
        }


@dataclass(frozen=True)
class Detectability:
    d_squared: float
    d: float
    auc: float


def min_eigenvalue(matrix) -> float:
    return float(np.linalg.eigvalsh(0.5 * (matrix + np.transpose(matrix)))[0])


def is_psd(matrix, scale: float | None = None, rtol: float = 1e-10) -> bool:
    """``min eig >= -rtol * scale``; ``scale`` defaults to ``|trace|``."""
    matrix = np.asarray(matrix, dtype=float)
    if scale is None:
        scale = abs(float(np.trace(matrix)))
    return min_eigenvalue(matrix) >= -rtol * scale


def _parametric_nodes(model, theta, scheme, rule):
    _check_rule(scheme, rule)
    gbar, grad = evaluate_on_rule(model, theta, rule)
    gbar_bins = bin_means_from_nodes(gbar, rule)
    grad_bins = rule.integrate_per_bin(grad)
    return gbar, grad, gbar_bins, grad_bins


def fim_list_mode(model: ParametricModel, theta, rule) -> np.ndarray:
    """``F_LM = integral grad(gbar) grad(gbar)' / gbar``."""
    gbar, grad = evaluate_on_rule(model, theta, rule)
    outer = grad[:, :, None] * grad[:, None, :] / gbar[:, None, None]
    f = rule.integrate(outer)
    return 0.5 * (f + f.T)


def fim_binned(model: ParametricModel, theta, scheme: BinningScheme, rule) -> np.ndarray:
    """``F_B = sum_m grad(gbar_m) grad(gbar_m)' / gbar_m``."""
    _, _, gbar_bins, grad_bins = _parametric_nodes(model, theta, scheme, rule)
    f = np.einsum("mi,mj,m->ij", grad_bins, grad_bins, 1.0 / gbar_bins)
    return 0.5 * (f + f.T)


def fim_difference(model: ParametricModel, theta, scheme: BinningScheme, rule) -> np.ndarray:
    """``F_LM - F_B`` assembled bin by bin from log-gradients.

    Integrates ``[s s' - s_m s_m'] gbar`` over each cell, where
    ``s = grad log gbar(a)`` and ``s_m = grad log gbar_m``.
    """
    gbar, grad, gbar_bins, grad_bins = _parametric_nodes(model, theta, scheme, rule)
    s = grad / gbar[:, None]
    sm = (grad_bins / gbar_bins[:, None])[rule.bin_of_node]
    integrand = (s[:, :, None] * s[:, None, :] - sm[:, :, None] * sm[:, None, :]) * gbar[:, None, None]
    d = rule.integrate(integrand)
    return 0.5 * (d + d.T)


def _check_delta(delta, p: int) -> np.ndarray:
    delta = np.atleast_1d(np.asarray(delta, dtype=float))
    if delta.shape != (p,):
        raise InputError(f"perturbation must have {p} components, got {delta.shape}")
    if not np.any(delta != 0):
        raise ZeroPerturbationError()
    return delta


def loss_from_node_functions(gamma, gbar, rule, quadform_lm: float, quadform_binned: float,
                             delta, gbar_bins=None) -> LossReport:
    """Assemble a :class:`LossReport` from a direction ``gamma`` and mean ``gbar`` at nodes.

    The caller supplies both quadratic forms (from matrices or operators);
    the null-norm and per-bin routes are computed here.
    """
    if gbar_bins is None:
        gbar_bins = bin_means_from_nodes(gbar, rule)
    gamma1, gamma0 = decompose(gamma, gbar, rule, gbar_bins)
    null_norm = rule.integrate(gamma0 * gamma0 / gbar)
    b_gamma = rule.integrate_per_bin(gamma)
    dev = gamma / gbar - (b_gamma / gbar_bins)[rule.bin_of_node]
    per_bin = rule.integrate_per_bin(dev * dev * gbar)
    return LossReport(
        quadform_lm=float(quadform_lm),
        quadform_binned=float(quadform_binned),
        loss_direct=float(quadform_lm - quadform_binned),
        loss_null_norm=float(null_norm),
        loss_per_bin=per_bin,
        delta=np.asarray(delta),
    )


def loss_quadform(model: ParametricModel, theta, delta, scheme: BinningScheme, rule) -> LossReport:
    """Fisher information lost by binning along ``delta``."""
    delta = _check_delta(delta, model.param_dim)
    gbar, grad, gbar_bins, _ = _parametric_nodes(model, theta, scheme, rule)
    f_lm = fim_list_mode(model, theta, rule)
    f_b = fim_binned(model, theta, scheme, rule)
    return loss_from_node_functions(
        grad @ delta, gbar, rule,
        quadform_lm=delta @ f_lm @ delta,
        quadform_binned=delta @ f_b @ delta,
        delta=delta,
        gbar_bins=gbar_bins,
    )


def _check_covariance(k, p: int, rtol: float = 1e-12) -> np.ndarray:
    k = np.atleast_2d(np.asarray(k, dtype=float))
    if k.shape != (p, p):
        raise InputError(f"covariance must be {p}x{p}, got {k.shape}")
    scale = max(float(np.max(np.abs(k))), 1e-300)
    if np.max(np.abs(k - k.T)) > rtol * scale or not is_psd(k, scale=scale * p, rtol=rtol):
        raise InputError("covariance not symmetric PSD")
    return k


def average_loss_trace(model: ParametricModel, theta, scheme: BinningScheme, rule, k) -> float:
    """``tr(K (F_LM - F_B))``, the loss averaged over ``delta ~ (0, K)``."""
    k = _check_covariance(k, model.param_dim)
    return float(np.trace(k @ fim_difference(model, theta, scheme, rule)))


def average_loss_isotropic(model: ParametricModel, theta, scheme: BinningScheme, rule,
                           sigma: float) -> float:
    """The ``K = sigma^2 I`` case via per-node squared log-gradient norms."""
    gbar, grad, gbar_bins, grad_bins = _parametric_nodes(model, theta, scheme, rule)
    s2 = np.sum((grad / gbar[:, None]) ** 2, axis=1)
    sm2 = np.sum((grad_bins / gbar_bins[:, None]) ** 2, axis=1)[rule.bin_of_node]
    return float(sigma) ** 2 * rule.integrate((s2 - sm2) * gbar)


def auc_from_detectability(d: float) -> Detectability:
    """Ideal-observer AUC, ``1/2 + erf(d/2)/2``."""
    d = float(d)
    if d < 0 or math.isnan(d):
        raise InputError("negative detectability")
    return Detectability(d * d, d, 0.5 + 0.5 * math.erf(0.5 * d))


def detectability_from_fim(fim, delta) -> Detectability:
    """Lowest-order detectability of ``theta -> theta + delta``: ``d^2 = delta' F delta``."""
    fim = np.atleast_2d(np.asarray(fim, dtype=float))
    delta = _check_delta(delta, fim.shape[0])
    d2 = float(delta @ fim @ delta)
    # tiny negative round-off from a PSD matrix clamps to zero
    d = math.sqrt(max(d2, 0.0))
    det = auc_from_detectability(d)
    return Detectability(d2, det.d, det.auc)
