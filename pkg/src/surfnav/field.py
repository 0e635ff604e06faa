"""Repulsion weights, lifted guiding vector fields, and the control law.

Everything here is a pure function of its inputs, so evaluations can run
concurrently across robots on an immutable snapshot of the swarm.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import SeparationViolationError

__all__ = [
    "FieldGains",
    "ControlOutput",
    "parity_sign",
    "repulsion_weight",
    "repulsion_weight_derivative",
    "repulsion_potential",
    "repulsion_terms",
    "pairwise_repulsion",
    "lifted_field_terms",
    "higher_dim_gvf",
    "original_gvf_3d",
    "cgvf_control",
]


def parity_sign(n):
    """(-1)**n as a float."""
    return -1.0 if n % 2 else 1.0


@dataclass(eq=False)
class FieldGains:
    """Gains of the lifted field for one robot.

    ``k`` holds one positive convergence gain per ambient component, ``c``
    the positive coordination gain, and ``m_tail`` the two trailing entries
    of the traversal vector (both nonzero; all other entries are zero,
    which is the restriction under which the field has a closed form).
    """

    k: np.ndarray
    c: float
    m_tail: tuple = (-1.0, 1.0)

    def __post_init__(self):
        self.k = np.atleast_1d(np.asarray(self.k, dtype=float))
        self.c = float(self.c)
        self.m_tail = (float(self.m_tail[0]), float(self.m_tail[1]))
        if self.k.ndim != 1 or np.any(self.k <= 0.0):
            raise ValueError("every convergence gain k_j must be positive")
        if not self.c > 0.0:
            raise ValueError("coordination gain c must be positive")
        if self.m_tail[0] == 0.0 or self.m_tail[1] == 0.0:
            raise ValueError("both trailing traversal entries must be nonzero")


@dataclass(eq=False)
class ControlOutput:
    """Physical velocity command plus virtual-coordinate rates."""

    u: np.ndarray
    omega_rate: np.ndarray


def _check_radii(safe_radius, sensing_radius):
    if not 0.0 < safe_radius < sensing_radius:
        raise ValueError("radii must satisfy 0 < safe_radius < sensing_radius")


def repulsion_weight(s, safe_radius, sensing_radius):
    """Repulsion weight ((s - R)/(s - r))^2 on (r, R], zero beyond R.

    Continuous on (r, inf), strictly decreasing on (r, R], and unbounded as
    the separation s approaches the safe radius r from above.  Separations
    at or below r raise: exact trajectories never reach them, so a breach
    signals a too-coarse integration step.  Accepts arrays elementwise.
    """
    _check_radii(safe_radius, sensing_radius)
    arr = np.asarray(s, dtype=float)
    if np.any(arr <= safe_radius):
        raise SeparationViolationError(np.min(arr), safe_radius)
    w = np.where(
        arr <= sensing_radius,
        (arr - sensing_radius) ** 2 / (arr - safe_radius) ** 2,
        0.0,
    )
    return float(w) if arr.ndim == 0 else w


def repulsion_weight_derivative(s, safe_radius, sensing_radius):
    """Slope of the repulsion weight: 2(s-R)(R-r)/(s-r)^3 on (r, R], else 0.

    Both one-sided limits at s = R are zero, so the weight is C^1 there.
    """
    _check_radii(safe_radius, sensing_radius)
    arr = np.asarray(s, dtype=float)
    if np.any(arr <= safe_radius):
        raise SeparationViolationError(np.min(arr), safe_radius)
    d = np.where(
        arr <= sensing_radius,
        2.0 * (arr - sensing_radius) * (sensing_radius - safe_radius)
        / (arr - safe_radius) ** 3,
        0.0,
    )
    return float(d) if arr.ndim == 0 else d


def repulsion_potential(s, safe_radius, sensing_radius):
    """Integral of the repulsion weight from s out to the sensing radius.

    Closed form from the antiderivative (s-r) - 2(R-r)log(s-r) - (R-r)^2/(s-r);
    the tests cross-check it against adaptive numeric quadrature.  Vanishes
    at s = R, so the swarm's potential energy is continuous across
    neighbor-set switches.
    """
    _check_radii(safe_radius, sensing_radius)
    arr = np.asarray(s, dtype=float)
    if np.any(arr <= safe_radius):
        raise SeparationViolationError(np.min(arr), safe_radius)
    d = sensing_radius - safe_radius
    t = arr - safe_radius
    pot = np.where(
        arr < sensing_radius,
        2.0 * d * np.log(t / d) - t + d * d / t,
        0.0,
    )
    return float(pot) if arr.ndim == 0 else pot


def repulsion_terms(omega_self, neighbor_omegas, safe_radius, sensing_radius):
    """Total repulsion exerted on one robot in the parameter plane.

    Sums weight(d) * (own - neighbor)/d over the supplied neighbors.  The
    summand is antisymmetric under swapping a pair, so the swarm-wide sum
    of all repulsion terms cancels exactly.
    """
    _check_radii(safe_radius, sensing_radius)
    omega_self = np.asarray(omega_self, dtype=float)
    eta = np.zeros(2)
    for omega_k in neighbor_omegas:
        gap = omega_self - np.asarray(omega_k, dtype=float)
        sep = float(np.hypot(gap[0], gap[1]))
        if sep <= safe_radius:
            raise SeparationViolationError(sep, safe_radius)
        eta += repulsion_weight(sep, safe_radius, sensing_radius) * gap / sep
    return eta


def pairwise_repulsion(omegas, safe_radius, sensing_radius):
    """Repulsion for every robot at once, plus the pair-distance matrix.

    Neighbors are the pairs strictly inside the sensing radius.  Raises
    with the offending pair if any separation is at or below the safe
    radius (such a pair is always inside the sensing radius too).
    """
    _check_radii(safe_radius, sensing_radius)
    omegas = np.asarray(omegas, dtype=float)
    count = len(omegas)
    diff = omegas[:, None, :] - omegas[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    off = ~np.eye(count, dtype=bool)
    breach = off & (dist <= safe_radius)
    if np.any(breach):
        i, k = np.argwhere(breach)[0]
        raise SeparationViolationError(dist[i, k], safe_radius, pair=(int(i), int(k)))
    near = off & (dist < sensing_radius)
    weight = np.zeros_like(dist)
    if near.any():
        weight[near] = repulsion_weight(dist[near], safe_radius, sensing_radius)
    scale = np.divide(weight, dist, out=np.zeros_like(weight), where=near)
    eta = np.einsum("ik,ikj->ij", scale, diff)
    return eta, dist


class FieldTerms(NamedTuple):
    """Shared pieces of the lifted field; see ``lifted_field_terms``."""

    u: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    phi: np.ndarray
    F1: np.ndarray
    F2: np.ndarray


def lifted_field_terms(model, k, m_tail, x, omega):
    """Evaluate the pieces the lifted field and the control law share.

    ``u`` is the ambient block (propagation along the surface plus gain
    times the convergence error); ``s1`` and ``s2`` are the gain-weighted
    projections of the convergence error onto the two jacobian columns,
    which feed the virtual-coordinate rates.  Accepts single states
    (x: (n,), omega: (2,)) or batches with matching leading axes.
    """
    x = np.asarray(x, dtype=float)
    omega = np.asarray(omega, dtype=float)
    k = np.asarray(k, dtype=float)
    phi = x - model.eval(omega)
    jac = model.jacobian(omega)
    F1 = jac[..., 0]
    F2 = jac[..., 1]
    sgn = parity_sign(model.dim_ambient)
    m1, m2 = float(m_tail[0]), float(m_tail[1])
    kphi = k * phi
    u = sgn * (m2 * F1 - m1 * F2) - kphi
    s1 = np.sum(kphi * F1, axis=-1)
    s2 = np.sum(kphi * F2, axis=-1)
    return FieldTerms(u, s1, s2, phi, F1, F2)


def higher_dim_gvf(model, gains, p):
    """Lifted guiding vector field on the extended state (x, omega).

    Treating the two surface parameters as extra coordinates removes the
    singular points of the unlifted field: the last two components carry
    the constant traversal entries, so the lifted field stays nonzero
    (a sampled property here; compare ``original_gvf_3d``).
    """
    p = np.asarray(p, dtype=float)
    n = model.dim_ambient
    if p.shape != (n + 2,):
        raise ValueError(f"state must have length {n + 2} (ambient + 2 virtual)")
    if gains.k.shape != (n,):
        raise ValueError(f"gains.k must have one entry per ambient component ({n})")
    terms = lifted_field_terms(model, gains.k, gains.m_tail, p[:n], p[n:])
    sgn = parity_sign(n)
    m1, m2 = gains.m_tail
    return np.concatenate(
        [terms.u, [sgn * m2 + terms.s1, -sgn * m1 + terms.s2]]
    )


def original_gvf_3d(phi, grad_phi, m, k, x):
    """Unlifted guiding field in R^3 for a single implicit surface function.

    chi = grad_phi(x) x m - k * phi(x) * grad_phi(x).  Wherever the
    gradient is parallel to m on the zero level set, chi vanishes; those
    singular points are exactly what the lifted construction eliminates.
    """
    x = np.asarray(x, dtype=float)
    m = np.asarray(m, dtype=float)
    if m.shape != (3,) or not np.any(m != 0.0):
        raise ValueError("m must be a 3-vector with at least one nonzero entry")
    if not k > 0.0:
        raise ValueError("gain k must be positive")
    g = np.asarray(grad_phi(x), dtype=float)
    return np.cross(g, m) - k * float(phi(x)) * g


def cgvf_control(model, gains, x, omega, omega_hat, neighbor_omegas,
                 safe_radius, sensing_radius):
    """Coordinated control for one robot.

    The ambient command is the lifted field's first block; the
    virtual-coordinate rates add tracking toward the robot's estimate of
    the moving target and repulsion from neighbors' virtual coordinates.
    """
    omega = np.asarray(omega, dtype=float)
    omega_hat = np.asarray(omega_hat, dtype=float)
    if gains.k.shape != (model.dim_ambient,):
        raise ValueError(
            f"gains.k must have one entry per ambient component ({model.dim_ambient})"
        )
    terms = lifted_field_terms(model, gains.k, gains.m_tail, x, omega)
    eta = repulsion_terms(omega, neighbor_omegas, safe_radius, sensing_radius)
    sgn = parity_sign(model.dim_ambient)
    m1, m2 = gains.m_tail
    track = gains.c * (omega - omega_hat)
    omega_rate = np.array(
        [
            sgn * m2 + terms.s1 - track[0] + eta[0],
            -sgn * m1 + terms.s2 - track[1] + eta[1],
        ]
    )
    return ControlOutput(u=terms.u, omega_rate=omega_rate)
