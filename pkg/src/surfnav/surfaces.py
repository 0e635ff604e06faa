"""Parametric surface models embedded in n-dimensional space.

A surface is a map f from the parameter plane R^2 into R^n together with its
first partial derivatives.  Parameters are never wrapped, even for periodic
surfaces like the torus: virtual coordinates live on the unwrapped plane and
drift without bound, so evaluation must be defined on all of R^2.
"""

from __future__ import annotations

import numpy as np

from .errors import ScenarioError

__all__ = [
    "SurfaceModel",
    "torus",
    "plane",
    "wave",
    "make_surface",
    "eval_surface",
    "eval_jacobian",
    "surface_error",
    "finite_difference_jacobian",
    "sampled_derivative_bounds",
]


def finite_difference_jacobian(fn, omega, step_scale=1e-6):
    """Central-difference jacobian of ``fn: R^2 -> R^n``.

    The step for parameter l is ``step_scale * max(1, |omega_l|)``, which
    balances truncation against round-off in double precision.  Batched
    input of shape (..., 2) is fine as long as ``fn`` broadcasts.
    """
    omega = np.asarray(omega, dtype=float)
    cols = []
    for axis in range(2):
        h = step_scale * np.maximum(1.0, np.abs(omega[..., axis]))
        up = omega.copy()
        up[..., axis] += h
        down = omega.copy()
        down[..., axis] -= h
        delta = np.asarray(fn(up), dtype=float) - np.asarray(fn(down), dtype=float)
        cols.append(delta / (2.0 * h)[..., None])
    return np.stack(cols, axis=-1)


class SurfaceModel:
    """A 2D parametric surface in R^n with first-derivative access.

    ``eval_fn`` maps parameter points of shape (..., 2) to ambient points of
    shape (..., n) and must be defined on the whole plane.  ``jacobian_fn``,
    when given, returns the stacked partials of shape (..., n, 2) with
    column l holding df/d omega_l; otherwise a central finite-difference
    fallback is used.  Instances are immutable after construction and safe
    for concurrent read access.
    """

    def __init__(self, dim_ambient, eval_fn, jacobian_fn=None,
                 derivative_bound_hint=None, name="custom"):
        if int(dim_ambient) < 1:
            raise ValueError("dim_ambient must be a positive integer")
        if derivative_bound_hint is not None and not derivative_bound_hint > 0:
            raise ValueError("derivative_bound_hint must be positive")
        self.dim_ambient = int(dim_ambient)
        self.derivative_bound_hint = derivative_bound_hint
        self.name = str(name)
        self._eval_fn = eval_fn
        self._jacobian_fn = jacobian_fn

    def eval(self, omega):
        """Embed parameter point(s): shape (..., 2) -> (..., n)."""
        return np.asarray(self._eval_fn(np.asarray(omega, dtype=float)), dtype=float)

    def jacobian(self, omega):
        """First partials [df/domega_1 | df/domega_2], shape (..., n, 2)."""
        omega = np.asarray(omega, dtype=float)
        if self._jacobian_fn is None:
            return finite_difference_jacobian(self._eval_fn, omega)
        return np.asarray(self._jacobian_fn(omega), dtype=float)

    def __repr__(self):
        return f"SurfaceModel({self.name!r}, dim_ambient={self.dim_ambient})"


def torus(major_radius=6.0, minor_radius=2.0):
    """Torus of revolution about the third axis, embedded in R^3.

    f(w) = ((a + b cos w1) cos w2, (a + b cos w1) sin w2, b sin w1)
    with a the major and b the minor radius.
    """
    a, b = float(major_radius), float(minor_radius)
    if not (a > b > 0.0):
        raise ValueError("torus requires major_radius > minor_radius > 0")

    def ev(w):
        w1, w2 = w[..., 0], w[..., 1]
        ring = a + b * np.cos(w1)
        return np.stack([ring * np.cos(w2), ring * np.sin(w2), b * np.sin(w1)], axis=-1)

    def jac(w):
        w1, w2 = w[..., 0], w[..., 1]
        ring = a + b * np.cos(w1)
        d1 = np.stack(
            [-b * np.sin(w1) * np.cos(w2), -b * np.sin(w1) * np.sin(w2), b * np.cos(w1)],
            axis=-1,
        )
        d2 = np.stack([-ring * np.sin(w2), ring * np.cos(w2), np.zeros_like(ring)], axis=-1)
        return np.stack([d1, d2], axis=-1)

    return SurfaceModel(3, ev, jac, derivative_bound_hint=a + b,
                        name=f"torus({a:g},{b:g})")


def plane():
    """Flat plane f(w) = (w1, w2, 0) in R^3."""

    def ev(w):
        w1, w2 = w[..., 0], w[..., 1]
        return np.stack([w1, w2, np.zeros_like(w1)], axis=-1)

    base = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])

    def jac(w):
        return np.broadcast_to(base, w.shape[:-1] + (3, 2)).copy()

    return SurfaceModel(3, ev, jac, derivative_bound_hint=1.0, name="plane")


def wave(amplitude=1.0, freq1=1.0, freq2=1.0):
    """Plane with sinusoidal height f(w) = (w1, w2, A sin(a w1) cos(b w2))."""
    amp, fa, fb = float(amplitude), float(freq1), float(freq2)

    def ev(w):
        w1, w2 = w[..., 0], w[..., 1]
        return np.stack([w1, w2, amp * np.sin(fa * w1) * np.cos(fb * w2)], axis=-1)

    def jac(w):
        w1, w2 = w[..., 0], w[..., 1]
        one = np.ones_like(w1)
        zero = np.zeros_like(w1)
        d1 = np.stack([one, zero, amp * fa * np.cos(fa * w1) * np.cos(fb * w2)], axis=-1)
        d2 = np.stack([zero, one, -amp * fb * np.sin(fa * w1) * np.sin(fb * w2)], axis=-1)
        return np.stack([d1, d2], axis=-1)

    peak = abs(amp) * max(abs(fa), abs(fb))
    hint = max(1.0, peak, peak * max(abs(fa), abs(fb)))
    return SurfaceModel(3, ev, jac, derivative_bound_hint=hint,
                        name=f"wave({amp:g},{fa:g},{fb:g})")


_BUILTINS = {"torus": (torus, 2), "plane": (plane, 0), "wave": (wave, 3)}


def make_surface(name, params=()):
    """Instantiate a builtin surface by name with numeric parameters."""
    key = str(name).strip().lower()
    if key not in _BUILTINS:
        raise ScenarioError(
            f"unknown surface {name!r}; builtin surfaces are {sorted(_BUILTINS)}"
        )
    factory, arity = _BUILTINS[key]
    values = [float(p) for p in params]
    if len(values) not in (0, arity):
        raise ScenarioError(
            f"surface {key!r} takes {arity} parameter(s), got {len(values)}"
        )
    return factory(*values)


def eval_surface(model, omega):
    """Point on the surface addressed by the virtual coordinates."""
    return model.eval(omega)


def eval_jacobian(model, omega):
    """Stacked first partials of the embedding at the virtual coordinates."""
    return model.jacobian(omega)


def surface_error(model, x, omega):
    """Componentwise gap between a position and its addressed surface point."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.dim_ambient:
        raise ValueError(
            f"position has {x.shape[-1]} components, surface is embedded in"
            f" R^{model.dim_ambient}"
        )
    return x - model.eval(omega)


def sampled_derivative_bounds(model, low=-10.0, high=10.0, samples=100,
                              step=1e-4, seed=0):
    """Largest sampled first and second finite-difference partials.

    Draws parameter points uniformly from [low, high]^2 and returns
    (max_first, max_second) over all components and directions.  Both must
    stay finite for the parameterization to be admissible; for builtins
    they also stay below the model's ``derivative_bound_hint``.
    """
    rng = np.random.default_rng(seed)
    pts = rng.uniform(low, high, size=(int(samples), 2))
    f0 = model.eval(pts)
    max_first = 0.0
    max_second = 0.0
    for axis in range(2):
        e = np.zeros(2)
        e[axis] = step
        fp = model.eval(pts + e)
        fm = model.eval(pts - e)
        max_first = max(max_first, float(np.max(np.abs((fp - fm) / (2.0 * step)))))
        max_second = max(
            max_second, float(np.max(np.abs((fp - 2.0 * f0 + fm) / step**2)))
        )
    ee = np.array([step, step])
    em = np.array([step, -step])
    mixed = (model.eval(pts + ee) - model.eval(pts + em)
             - model.eval(pts - em) + model.eval(pts - ee)) / (4.0 * step**2)
    max_second = max(max_second, float(np.max(np.abs(mixed))))
    return max_first, max_second
