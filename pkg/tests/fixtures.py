"""Scenario-derived fixtures shared by unit and acceptance tests."""

import numpy as np

from pgs.geometry import Trajectory
from pgs.scenario import generate_synthetic


def overtake_optimizer_case(seed: int = 0):
    """Straight init through a parked car, expert window ending in the left lane.

    Returns (init, gt, left_centerline, agent_pairs).
    """
    sc = generate_synthetic("overtake", seed)
    park = sc.agents[0]
    px = park.modes[0].trajectory.points[0, 0]
    xs = px - 12.0 + 8.0 * 0.5 * np.arange(1, 7)
    init = Trajectory(np.column_stack([xs, np.zeros(6)]), 0.5, 0.5)
    gt = Trajectory(np.column_stack([xs, np.full(6, 3.5)]), 0.5, 0.5)
    left = sc.lane("left").centerline
    pairs = [(park, park.modes[0].trajectory.resample(0.5, 0.5, 6))]
    return init, gt, left, pairs


def noisy_left_case(seed: int = 0, sigma: float = 0.2):
    """Expert window along the left lane with Gaussian noise on both axes."""
    _, _, left, _ = overtake_optimizer_case(seed)
    rng = np.random.default_rng(seed)
    xs = 40.0 + 4.0 * np.arange(6)
    pts = np.column_stack([xs, np.full(6, 3.5)]) + rng.normal(0.0, sigma, size=(6, 2))
    return Trajectory(pts, 0.5, 0.5), left
