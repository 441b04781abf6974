"""Attribute spaces and parametric mean-data functions.

A model is a family of intensities ``gbar(a | theta)`` of a Poisson point
process on a box-shaped attribute space, together with its exact gradient
with respect to ``theta``.  All callables are vectorised: ``mean`` takes an
``(n, q)`` array of attribute points and returns ``(n,)``; ``grad`` returns
``(n, p)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InputError, NonpositiveDensityError, OutsideSpaceError

__all__ = [
    "AttributeSpace",
    "ParametricModel",
    "mean_at",
    "grad_mean_at",
    "total_mean",
    "grad_check",
    "evaluate_on_rule",
    "gaussian_sum",
    "constant_model",
    "affine_1d_model",
    "scaled_profile_model",
    "gaussian_mixture_model",
    "G1_THETA",
]


@dataclass(frozen=True, eq=False)
class AttributeSpace:
    """Axis-aligned box ``[lower_0, upper_0] x ... x [lower_{q-1}, upper_{q-1}]``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.ndim != 1 or lo.shape != hi.shape or lo.size == 0:
            raise InputError("lower and upper must be nonempty vectors of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise InputError("attribute space bounds must be finite")
        if np.any(hi <= lo):
            raise InputError("attribute space needs upper > lower on every axis")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def __eq__(self, other):
        if not isinstance(other, AttributeSpace):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(self.upper, other.upper)

    def __hash__(self):
        return hash((self.lower.tobytes(), self.upper.tobytes()))

    @classmethod
    def interval(cls, lower: float, upper: float) -> "AttributeSpace":
        return cls([lower], [upper])

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    def contains(self, a) -> np.ndarray:
        a = self.as_points(a)
        return np.all((a >= self.lower) & (a <= self.upper), axis=1)

    def as_points(self, a) -> np.ndarray:
        """Coerce ``a`` to an ``(n, q)`` float array."""
        a = np.asarray(a, dtype=float)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        elif a.ndim == 1:
            # a bare vector is one point when q > 1, n points when q == 1
            a = a.reshape(1, -1) if self.dim > 1 else a.reshape(-1, 1)
        if a.shape[1] != self.dim:
            raise InputError(f"expected points with {self.dim} coordinates, got {a.shape[1]}")
        return a

    def check_inside(self, a) -> np.ndarray:
        a = self.as_points(a)
        inside = self.contains(a)
        if not np.all(inside):
            raise OutsideSpaceError(a[np.argmin(inside)].tolist())
        return a


@dataclass(frozen=True, eq=False)
class ParametricModel:
    """Mean data function ``gbar(a | theta)`` with its theta-gradient.

    ``mean(a, theta)`` maps ``(n, q)`` points to ``(n,)`` densities (expected
    events per unit attribute volume); ``grad(a, theta)`` maps to ``(n, p)``.
    """

    space: AttributeSpace
    param_dim: int
    mean: Callable[[np.ndarray, np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray, np.ndarray], np.ndarray]
    name: str = "custom"
    nominal: np.ndarray | None = field(default=None)

    def check_theta(self, theta) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.shape != (self.param_dim,):
            raise InputError(
                f"{self.name}: theta must have {self.param_dim} components, got {theta.shape}"
            )
        if not np.all(np.isfinite(theta)):
            raise InputError(f"{self.name}: theta must be finite")
        return theta

    def scaled(self, c: float) -> "ParametricModel":
        """The model ``c * gbar`` at unchanged theta."""
        if not c > 0:
            raise InputError("scale factor must be positive")
        return ParametricModel(
            space=self.space,
            param_dim=self.param_dim,
            mean=lambda a, t: c * self.mean(a, t),
            grad=lambda a, t: c * self.grad(a, t),
            name=f"{c:g}*{self.name}",
            nominal=self.nominal,
        )


def _require_positive(values: np.ndarray, points: np.ndarray) -> np.ndarray:
    bad = ~(values > 0)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise NonpositiveDensityError(points[i].tolist(), float(values[i]))
    return values


def mean_at(model: ParametricModel, a, theta) -> float:
    """Evaluate ``gbar(a | theta)`` at one attribute point."""
    pts = model.space.check_inside(a)
    if pts.shape[0] != 1:
        raise InputError("mean_at takes a single point")
    theta = model.check_theta(theta)
    val = np.asarray(model.mean(pts, theta), dtype=float)
    return float(_require_positive(val, pts)[0])


def grad_mean_at(model: ParametricModel, a, theta) -> np.ndarray:
    pts = model.space.check_inside(a)
    if pts.shape[0] != 1:
        raise InputError("grad_mean_at takes a single point")
    theta = model.check_theta(theta)
    return np.asarray(model.grad(pts, theta), dtype=float)[0]


def evaluate_on_rule(model: ParametricModel, theta, rule) -> tuple[np.ndarray, np.ndarray]:
    """Mean and gradient at every node of ``rule``; hard error on nonpositive means."""
    theta = model.check_theta(theta)
    gbar = np.asarray(model.mean(rule.nodes, theta), dtype=float)
    _require_positive(gbar, rule.nodes)
    grad = np.asarray(model.grad(rule.nodes, theta), dtype=float).reshape(len(gbar), model.param_dim)
    return gbar, grad


def total_mean(model: ParametricModel, theta, rule) -> float:
    """Expected total count ``N(theta)``: the quadrature of ``gbar`` over the space."""
    gbar, _ = evaluate_on_rule(model, theta, rule)
    return rule.integrate(gbar)


def grad_check(model: ParametricModel, theta, n_samples: int = 64, step: float = 1e-5,
               seed: int = 0) -> float:
    """Largest relative error between ``model.grad`` and central differences.

    Points are drawn uniformly in the attribute space.  The error for each
    point is ``|g - fd| / max(|g|, |fd|)`` taken over the gradient vector
    (max-norm), with an absolute floor so identically-zero components do not
    divide by zero.
    """
    if n_samples < 1 or not step > 0:
        raise InputError("need n_samples >= 1 and step > 0")
    theta = model.check_theta(theta)
    rng = np.random.default_rng(seed)
    sp = model.space
    a = sp.lower + rng.random((n_samples, sp.dim)) * sp.widths
    g = np.asarray(model.grad(a, theta), dtype=float).reshape(n_samples, model.param_dim)
    fd = np.empty_like(g)
    for k in range(model.param_dim):
        h = step * max(1.0, abs(theta[k]))
        tp, tm = theta.copy(), theta.copy()
        tp[k] += h
        tm[k] -= h
        fd[:, k] = (model.mean(a, tp) - model.mean(a, tm)) / (2 * h)
    scale = np.maximum(np.max(np.abs(g), axis=1), np.max(np.abs(fd), axis=1))
    scale = np.maximum(scale, 1e-300)
    return float(np.max(np.max(np.abs(g - fd), axis=1) / scale))


# ---------------------------------------------------------------------------
# model zoo
# ---------------------------------------------------------------------------

def gaussian_sum(x: np.ndarray, background: float, bumps: Sequence[dict]) -> np.ndarray:
    """``background + sum_j amp_j exp(-|x - c_j|^2 / (2 w_j^2))`` on ``(n, q)`` points.

    Each bump is a mapping with ``amplitude``, ``center`` and ``width``.
    Also accepts a 1-d ``x`` (treated as ``q = 1``).
    """
    x = np.asarray(x, dtype=float)
    pts = x.reshape(-1, 1) if x.ndim == 1 else x
    out = np.full(pts.shape[0], float(background))
    for b in bumps:
        c = np.atleast_1d(np.asarray(b["center"], dtype=float))
        r2 = np.sum((pts - c) ** 2, axis=1)
        out += float(b["amplitude"]) * np.exp(-0.5 * r2 / float(b["width"]) ** 2)
    return out


def constant_model(value: float = 1.0, space: AttributeSpace | None = None) -> ParametricModel:
    """``gbar = theta_0`` everywhere on the space (default ``[0, 1]``)."""
    space = space or AttributeSpace.interval(0.0, 1.0)

    def mean(a, t):
        return np.full(a.shape[0], t[0])

    def grad(a, t):
        return np.ones((a.shape[0], 1))

    return ParametricModel(space, 1, mean, grad, "constant", np.array([float(value)]))


def affine_1d_model() -> ParametricModel:
    """``gbar = theta_0 + theta_1 * a`` on ``[0, 1]``."""

    def mean(a, t):
        return t[0] + t[1] * a[:, 0]

    def grad(a, t):
        return np.column_stack([np.ones(a.shape[0]), a[:, 0]])

    return ParametricModel(
        AttributeSpace.interval(0.0, 1.0), 2, mean, grad, "affine-1d", np.array([1.0, 0.5])
    )


def scaled_profile_model(profile: Callable[[np.ndarray], np.ndarray],
                         space: AttributeSpace | None = None,
                         amplitude: float = 1.0) -> ParametricModel:
    """``gbar = theta_0 * h(a)`` for a fixed positive profile ``h``.

    ``profile`` takes ``(n, q)`` points.  Positivity of ``h`` is checked
    wherever the model is evaluated on a rule, like any other model.
    """
    space = space or AttributeSpace.interval(0.0, 1.0)

    def mean(a, t):
        return t[0] * np.asarray(profile(a), dtype=float)

    def grad(a, t):
        return np.asarray(profile(a), dtype=float).reshape(-1, 1)

    return ParametricModel(space, 1, mean, grad, "scaled-profile", np.array([float(amplitude)]))


# one bump, amp 5, centre 0.5, width 0.1, background 0.2
G1_THETA = np.array([5.0, 0.5, 0.1, 0.2])


def gaussian_mixture_model(n_components: int = 1, space: AttributeSpace | None = None,
                           nominal=None) -> ParametricModel:
    """Sum of Gaussian bumps plus a constant background.

    Parameters are laid out per component as ``(amplitude, center_0 .. center_{q-1},
    width)`` followed by one trailing background level.  Widths are standard
    deviations and the bumps are isotropic.
    """
    space = space or AttributeSpace.interval(0.0, 1.0)
    q = space.dim
    stride = q + 2
    p = n_components * stride + 1

    def mean(a, t):
        out = np.full(a.shape[0], t[-1])
        for j in range(n_components):
            amp, c, w = t[j * stride], t[j * stride + 1: j * stride + 1 + q], t[j * stride + 1 + q]
            out = out + amp * np.exp(-0.5 * np.sum((a - c) ** 2, axis=1) / w ** 2)
        return out

    def grad(a, t):
        g = np.empty((a.shape[0], p))
        for j in range(n_components):
            k = j * stride
            amp, c, w = t[k], t[k + 1: k + 1 + q], t[k + 1 + q]
            d = a - c
            r2 = np.sum(d ** 2, axis=1)
            e = np.exp(-0.5 * r2 / w ** 2)
            g[:, k] = e
            g[:, k + 1: k + 1 + q] = (amp * e / w ** 2)[:, None] * d
            g[:, k + 1 + q] = amp * e * r2 / w ** 3
        g[:, -1] = 1.0
        return g

    if nominal is None:
        if n_components == 1 and q == 1:
            nominal = G1_THETA
        else:
            centers = space.lower + (np.arange(n_components)[:, None] + 0.5) / n_components * space.widths
            width = 0.15 * float(np.min(space.widths))
            parts = [[5.0, *c, width] for c in centers]
            nominal = [x for part in parts for x in part] + [0.2]
    nominal = np.asarray(nominal, dtype=float)
    if nominal.shape != (p,):
        raise InputError(f"gaussian mixture needs {p} parameters, got {nominal.shape}")
    return ParametricModel(space, p, mean, grad, "gaussian-mixture", nominal)
