"""Robot, target, and swarm-level state; neighborhoods and target estimators.

State containers here are owned by the engine during a run.  Neighborhood
and estimator computations are pure functions of a snapshot, so they can be
evaluated per robot in parallel and committed once per step.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ScenarioError
from .field import FieldGains, parity_sign

__all__ = [
    "RobotState",
    "TargetState",
    "EstimatorMode",
    "ConsensusConfig",
    "SwarmConfig",
    "target_velocity",
    "neighbor_sets",
    "consensus_rate",
    "estimator_step",
    "ring_adjacency",
    "complete_adjacency",
    "validate_initial_separation",
]


def target_velocity(dim_ambient, m_tail):
    """Constant drift of the target's virtual coordinates.

    A point that is exactly on the surface feels no convergence terms, so
    its parameter rates reduce to the constant trailing entries of the
    lifted field: ((-1)^n * m_tail[1], -(-1)^n * m_tail[0]).
    """
    m1, m2 = float(m_tail[0]), float(m_tail[1])
    if m1 == 0.0 or m2 == 0.0:
        raise ValueError("both trailing traversal entries must be nonzero")
    sgn = parity_sign(int(dim_ambient))
    return np.array([sgn * m2, -sgn * m1])


@dataclass(eq=False)
class RobotState:
    """Physical position, virtual coordinates, and target estimate."""

    x: np.ndarray
    omega: np.ndarray
    omega_hat: np.ndarray = None

    def __post_init__(self):
        self.x = np.atleast_1d(np.asarray(self.x, dtype=float))
        self.omega = np.asarray(self.omega, dtype=float)
        if self.omega_hat is None:
            self.omega_hat = self.omega.copy()
        self.omega_hat = np.asarray(self.omega_hat, dtype=float)
        if self.omega.shape != (2,) or self.omega_hat.shape != (2,):
            raise ValueError("virtual coordinates must be 2-vectors")
        for arr in (self.x, self.omega, self.omega_hat):
            if not np.all(np.isfinite(arr)):
                raise ValueError("robot state components must be finite")


@dataclass(eq=False)
class TargetState:
    """Virtual target moving at constant velocity in the parameter plane."""

    omega_star: np.ndarray
    velocity: np.ndarray

    def __post_init__(self):
        self.omega_star = np.asarray(self.omega_star, dtype=float)
        self.velocity = np.asarray(self.velocity, dtype=float)
        if self.omega_star.shape != (2,) or self.velocity.shape != (2,):
            raise ValueError("target coordinates and velocity must be 2-vectors")
        if not np.all(np.isfinite(self.omega_star)):
            raise ValueError("target coordinates must be finite")
        if not np.any(self.velocity != 0.0):
            raise ValueError("target velocity must be nonzero")

    @classmethod
    def for_surface(cls, dim_ambient, m_tail=(-1.0, 1.0), omega_star=(0.0, 0.0)):
        """Target with the drift implied by the ambient dimension and tail."""
        return cls(np.asarray(omega_star, dtype=float),
                   target_velocity(dim_ambient, m_tail))


class EstimatorMode(str, Enum):
    """How each robot obtains its estimate of the target coordinates."""

    BROADCAST = "broadcast"
    CONSENSUS = "consensus"


def ring_adjacency(n_robots):
    """Undirected ring over robot indices."""
    adj = np.zeros((n_robots, n_robots), dtype=float)
    if n_robots > 1:
        idx = np.arange(n_robots)
        adj[idx, (idx + 1) % n_robots] = 1.0
        adj[(idx + 1) % n_robots, idx] = 1.0
    return adj


def complete_adjacency(n_robots):
    """All-to-all communication graph."""
    return np.ones((n_robots, n_robots), dtype=float) - np.eye(n_robots)


def _connected(adj):
    count = len(adj)
    seen = np.zeros(count, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        i = stack.pop()
        for k in np.nonzero(adj[i])[0]:
            if not seen[k]:
                seen[k] = True
                stack.append(int(k))
    return bool(seen.all())


@dataclass(eq=False)
class ConsensusConfig:
    """Leader-pinned linear consensus over an undirected communication graph.

    Leaders measure the target directly; everyone integrates the known
    constant target velocity as feed-forward plus a gain gamma times the
    disagreement with communication neighbors (and, for leaders, with the
    target itself).  Estimation errors decay exponentially whenever the
    graph is connected and at least one leader exists.
    """

    gamma: float
    adjacency: np.ndarray
    leaders: np.ndarray

    def __post_init__(self):
        self.gamma = float(self.gamma)
        if not self.gamma > 0.0:
            raise ScenarioError("consensus gain gamma must be positive")
        adj = np.asarray(self.adjacency, dtype=float)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ScenarioError("communication graph adjacency must be square")
        if np.any(adj != adj.T):
            raise ScenarioError("communication graph must be undirected (symmetric)")
        if np.any(np.diag(adj) != 0.0):
            raise ScenarioError("communication graph must have no self-loops")
        self.adjacency = (adj != 0.0).astype(float)
        leaders = np.asarray(self.leaders)
        if leaders.dtype != bool:
            mask = np.zeros(adj.shape[0], dtype=bool)
            mask[np.asarray(leaders, dtype=int)] = True
            leaders = mask
        if leaders.shape != (adj.shape[0],):
            raise ScenarioError("leader mask length must match the robot count")
        if not leaders.any():
            raise ScenarioError("consensus estimation needs at least one leader")
        self.leaders = leaders
        if not _connected(self.adjacency):
            raise ScenarioError("communication graph must be connected")
        self.degree = self.adjacency.sum(axis=1)

    @property
    def n_robots(self):
        return self.adjacency.shape[0]


@dataclass(eq=False)
class SwarmConfig:
    """Swarm-wide parameters: counts, radii, per-robot gains, estimator mode."""

    n_robots: int
    sensing_radius: float
    safe_radius: float
    k: np.ndarray
    c: np.ndarray
    m_tail: tuple = (-1.0, 1.0)
    estimator_mode: EstimatorMode = EstimatorMode.BROADCAST
    consensus: ConsensusConfig = None

    def __post_init__(self):
        self.n_robots = int(self.n_robots)
        self.sensing_radius = float(self.sensing_radius)
        self.safe_radius = float(self.safe_radius)
        self.m_tail = (float(self.m_tail[0]), float(self.m_tail[1]))
        self.estimator_mode = EstimatorMode(self.estimator_mode)
        if self.n_robots < 1:
            raise ScenarioError("robot count must be a positive integer")
        if not 0.0 < self.safe_radius < self.sensing_radius:
            raise ScenarioError("sensing_radius must exceed safe_radius > 0")
        self.k = np.asarray(self.k, dtype=float)
        self.c = np.asarray(self.c, dtype=float)
        if self.k.ndim != 2 or self.k.shape[0] != self.n_robots:
            raise ScenarioError("k must be an (n_robots, dim_ambient) array")
        if self.c.shape != (self.n_robots,):
            raise ScenarioError("c must have one entry per robot")
        if np.any(self.k <= 0.0) or np.any(self.c <= 0.0):
            raise ScenarioError("all gains must be positive")
        if self.m_tail[0] == 0.0 or self.m_tail[1] == 0.0:
            raise ScenarioError("both trailing traversal entries must be nonzero")
        if self.estimator_mode is EstimatorMode.CONSENSUS:
            if self.consensus is None:
                raise ScenarioError("consensus mode requires a ConsensusConfig")
            if self.consensus.n_robots != self.n_robots:
                raise ScenarioError("consensus graph size must match the robot count")

    @classmethod
    def uniform(cls, n_robots, dim_ambient, sensing_radius, safe_radius, k, c,
                m_tail=(-1.0, 1.0), estimator_mode=EstimatorMode.BROADCAST,
                consensus=None):
        """Same gains for every robot; a scalar k applies to every component."""
        k_arr = np.atleast_1d(np.asarray(k, dtype=float))
        if k_arr.ndim == 1 and k_arr.size == 1:
            k_arr = np.full(dim_ambient, float(k_arr[0]))
        if k_arr.shape != (dim_ambient,):
            raise ScenarioError(
                f"k must be a scalar or have {dim_ambient} components"
            )
        return cls(
            n_robots=n_robots,
            sensing_radius=sensing_radius,
            safe_radius=safe_radius,
            k=np.tile(k_arr, (n_robots, 1)),
            c=np.full(n_robots, float(c)),
            m_tail=m_tail,
            estimator_mode=estimator_mode,
            consensus=consensus,
        )

    def gains_for(self, i):
        """Per-robot view of the field gains."""
        return FieldGains(k=self.k[i].copy(), c=float(self.c[i]), m_tail=self.m_tail)


def neighbor_sets(omegas, sensing_radius):
    """Index sets of robots within the sensing radius in the parameter plane.

    Strict inequality: a pair at exactly the sensing radius is not
    neighboring.  The relation is symmetric by construction and never
    includes the robot itself.
    """
    omegas = np.asarray(omegas, dtype=float)
    diff = omegas[:, None, :] - omegas[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    within = (dist < float(sensing_radius)) & ~np.eye(len(omegas), dtype=bool)
    return [[int(k) for k in np.nonzero(row)[0]] for row in within]


def consensus_rate(omega_hat, target, config):
    """Continuous-time update rate of the leader-pinned consensus estimator."""
    omega_hat = np.asarray(omega_hat, dtype=float)
    pull = config.adjacency @ omega_hat - config.degree[:, None] * omega_hat
    pin = config.leaders[:, None] * (target.omega_star[None, :] - omega_hat)
    return target.velocity[None, :] + config.gamma * (pull + pin)


def estimator_step(mode, robots, target, dt, consensus=None):
    """One discrete update of every robot's target estimate.

    Broadcast mode pins every estimate to the target's current coordinates.
    Consensus mode advances by the known constant target velocity plus the
    leader-pinned consensus correction (forward Euler over dt); the
    estimate errors then decay exponentially.
    """
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    count = len(robots)
    if EstimatorMode(mode) is EstimatorMode.BROADCAST:
        return np.tile(target.omega_star, (count, 1))
    if consensus is None:
        raise ScenarioError("consensus mode requires a ConsensusConfig")
    if consensus.n_robots != count:
        raise ScenarioError("consensus graph size must match the robot count")
    omega_hat = np.array([robot.omega_hat for robot in robots], dtype=float)
    return omega_hat + dt * consensus_rate(omega_hat, target, consensus)


def validate_initial_separation(omegas, safe_radius):
    """Reject initial virtual coordinates with any pair inside the safe radius."""
    omegas = np.asarray(omegas, dtype=float)
    count = len(omegas)
    for i in range(count - 1):
        gaps = omegas[i + 1:] - omegas[i]
        dist = np.sqrt(np.sum(gaps * gaps, axis=1))
        j = int(np.argmin(dist))
        if dist[j] <= safe_radius:
            raise ScenarioError(
                f"initial virtual coordinates of robots {i} and {i + 1 + j} are"
                f" {dist[j]:.6g} apart; every pair must exceed the safe radius"
                f" {safe_radius:g}"
            )
