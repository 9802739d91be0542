"""Static SVG figures of scenarios and simulation traces."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Polygon  # noqa: E402

from .geometry import OrientedBox, Point2  # noqa: E402
from .scenario import ScenarioSpec  # noqa: E402

# fixed salt and no date keep SVG output byte-stable across runs
matplotlib.rcParams["svg.hashsalt"] = "pgs"


def _draw_box(ax, box: OrientedBox, **kw):
    ax.add_patch(Polygon(box.corners(), closed=True, **kw))


def _draw_lanes(ax, scenario: ScenarioSpec):
    for lane in scenario.lanes:
        pts = lane.centerline.points
        color = "tab:pink" if lane.id in scenario.ego.route else "orchid"
        ax.plot(pts[:, 0], pts[:, 1], ".", ms=1.5, color=color)
        ax.annotate(lane.id, pts[len(pts) // 2], fontsize=6, color="gray")


def plot_scenario(scenario: ScenarioSpec, path, spatial_target=None) -> None:
    fig, ax = plt.subplots(figsize=(8, 5))
    _draw_lanes(ax, scenario)
    exp = scenario.ego.expert_trajectory.points
    ax.scatter(exp[:, 0], exp[:, 1], c=np.arange(len(exp)), cmap="autumn", s=6, label="expert")
    if spatial_target is not None:
        tp = spatial_target.target.points
        ax.scatter(tp[:, 0], tp[:, 1], c=np.arange(len(tp)), cmap="winter", s=10, label="spatial target")
    w, l = scenario.ego.dims
    p = scenario.ego.pose
    _draw_box(ax, OrientedBox(p.position, w / 2, l / 2, p.heading), fc="tab:blue", alpha=0.6)
    for a in scenario.agents:
        for m in a.modes:
            pts = m.trajectory.points
            ax.plot(pts[:, 0], pts[:, 1], "--", lw=0.8, alpha=max(m.score, 0.2), color="tab:red")
        ip = a.initial_pose
        _draw_box(ax, OrientedBox(ip.position, a.width / 2, a.length / 2, ip.heading), fc="tab:red", alpha=0.6)
    ax.set_aspect("equal")
    ax.set_title(scenario.meta.name or "scenario")
    ax.legend(fontsize=7, loc="best")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_trace(rows: list[dict], path, scenario: ScenarioSpec | None = None) -> None:
    """Plot the executed ego path from trace rows (as loaded by ``io.load_trace``)."""
    fig, ax = plt.subplots(figsize=(8, 5))
    if scenario is not None:
        _draw_lanes(ax, scenario)
    xy = np.array([r["ego"]["pose"]["position"] for r in rows])
    speed = np.array([r["ego"]["speed"] for r in rows])
    sc = ax.scatter(xy[:, 0], xy[:, 1], c=speed, cmap="viridis", s=4)
    fig.colorbar(sc, ax=ax, label="speed [m/s]")
    for r in rows:
        if any(r["collision_flags"].values()):
            w, l = r["ego"]["dims"]
            pos = r["ego"]["pose"]["position"]
            _draw_box(ax, OrientedBox(Point2(*pos), w / 2, l / 2, r["ego"]["pose"]["heading"]), fc="none", ec="red")
    ax.set_aspect("equal")
    ax.set_title("trace")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
