"""Shared construction helpers for the test suite."""

import numpy as np

from surfnav.engine import SimulationState
from surfnav.surfaces import torus
from surfnav.swarm import SwarmConfig, TargetState


def draw_separated_omegas(rng, count, half_width=3.0, margin=0.5):
    """Uniform draw in a square, rejected until pairwise gaps exceed margin."""
    while True:
        omega = rng.uniform(-half_width, half_width, size=(count, 2))
        if count == 1:
            return omega
        dist = np.linalg.norm(omega[:, None] - omega[None, :], axis=2)
        if dist[~np.eye(count, dtype=bool)].min() > margin:
            return omega


def flagship_config(n_robots):
    """The gain set used by the flagship torus scenario."""
    return SwarmConfig.uniform(n_robots, 3, sensing_radius=0.6, safe_radius=0.4,
                               k=0.6, c=3.0)


def torus_swarm_state(seed, n_robots, offset=2.0, half_width=3.0, margin=0.5,
                      model=None):
    """Seeded swarm near the torus: omegas spread out, positions offset from
    each robot's addressed surface point."""
    model = model or torus(6.0, 2.0)
    rng = np.random.default_rng(seed)
    omega = draw_separated_omegas(rng, n_robots, half_width, margin)
    x = model.eval(omega) + rng.uniform(-offset, offset, size=(n_robots, 3))
    target = TargetState.for_surface(3, (-1.0, 1.0), (0.0, 0.0))
    omega_hat = np.tile(target.omega_star, (n_robots, 1))
    return SimulationState(0.0, x, omega, omega_hat, target)
