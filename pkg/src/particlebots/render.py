"""Headless rasterization of world snapshots to binary PPM images.

Output is for inspection and figure reproduction only; frames are never fed
back to agents as observations.  Pixel output is deterministic: same world
and camera, same bytes.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .physics import Vec2, WorldState

# Palette (RGB).  Robot shade interpolates contracted -> expanded.
BACKGROUND = (245, 245, 245)
ROBOT_CONTRACTED = (70, 110, 200)
ROBOT_EXPANDED = (230, 130, 40)
ROBOT_DEAD = (110, 110, 110)
OBSTACLE = (60, 60, 60)
OBJECT_COLOR = (240, 90, 30)
GOAL_COLOR = (40, 170, 60)
GOAL_MARKER_HALF = 4  # pixels


@dataclass(frozen=True)
class Camera:
    """Top-down camera; defaults to being centered over the goal."""

    center: Vec2
    scale: float = 10.0  # pixels per length unit
    width: int = 640
    height: int = 480

    def __post_init__(self):
        if self.scale <= 0 or self.width <= 0 or self.height <= 0:
            raise ValueError("camera scale and dimensions must be positive")

    def to_pixel(self, p: Vec2) -> tuple[int, int]:
        """Nearest pixel for a world point (y axis points up on screen)."""
        u = (p.x - self.center.x) * self.scale + self.width / 2.0
        v = self.height / 2.0 - (p.y - self.center.y) * self.scale
        return (int(round(u)), int(round(v)))


def rasterize_frame(
    world: WorldState,
    goal: Vec2,
    camera: Optional[Camera] = None,
    contracted_radius: float = 1.0,
    expanded_radius: float = 1.5,
) -> bytes:
    """Render one world snapshot to a binary PPM (P6) image.

    Robots are filled discs at their current radius, shaded from the
    contracted to the expanded colour by expansion fraction; unresponsive
    robots use a third shade.  Obstacles, the movable object, and a goal
    marker are drawn underneath the robots.
    """
    if camera is None:
        camera = Camera(center=goal)
    img = np.empty((camera.height, camera.width, 3), dtype=np.uint8)
    img[:, :] = BACKGROUND

    for obstacle in world.obstacles:
        half_px = max(1, int(round(obstacle.thickness / 2.0 * camera.scale)))
        for (a, b) in obstacle.segments:
            _draw_capsule(img, camera.to_pixel(a), camera.to_pixel(b), half_px, OBSTACLE)

    gx, gy = camera.to_pixel(goal)
    _draw_rect(img, gx, gy, GOAL_MARKER_HALF, GOAL_COLOR)

    if world.object is not None:
        cx, cy = camera.to_pixel(world.object.position)
        _draw_disc(img, cx, cy, int(round(world.object.radius * camera.scale)), OBJECT_COLOR)

    span = expanded_radius - contracted_radius
    for robot in world.robots:
        cx, cy = camera.to_pixel(robot.position)
        rpx = int(round(robot.radius * camera.scale))
        if not robot.responsive:
            color = ROBOT_DEAD
        else:
            f = 0.0 if span <= 0 else min(max((robot.radius - contracted_radius) / span, 0.0), 1.0)
            color = tuple(
                int(round(c0 + (c1 - c0) * f))
                for c0, c1 in zip(ROBOT_CONTRACTED, ROBOT_EXPANDED)
            )
        _draw_disc(img, cx, cy, rpx, color)

    header = f"P6\n{camera.width} {camera.height}\n255\n".encode("ascii")
    return header + img.tobytes()


def _draw_disc(img: np.ndarray, cx: int, cy: int, r: int, color) -> None:
    h, w = img.shape[:2]
    x0, x1 = max(cx - r, 0), min(cx + r + 1, w)
    y0, y1 = max(cy - r, 0), min(cy + r + 1, h)
    if x0 >= x1 or y0 >= y1:
        return
    yy, xx = np.ogrid[y0:y1, x0:x1]
    mask = (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r
    img[y0:y1, x0:x1][mask] = color


def _draw_rect(img: np.ndarray, cx: int, cy: int, half: int, color) -> None:
    h, w = img.shape[:2]
    x0, x1 = max(cx - half, 0), min(cx + half + 1, w)
    y0, y1 = max(cy - half, 0), min(cy + half + 1, h)
    if x0 < x1 and y0 < y1:
        img[y0:y1, x0:x1] = color


def _draw_capsule(img: np.ndarray, p0: tuple[int, int], p1: tuple[int, int], half_px: int, color) -> None:
    h, w = img.shape[:2]
    x0 = max(min(p0[0], p1[0]) - half_px, 0)
    x1 = min(max(p0[0], p1[0]) + half_px + 1, w)
    y0 = max(min(p0[1], p1[1]) - half_px, 0)
    y1 = min(max(p0[1], p1[1]) + half_px + 1, h)
    if x0 >= x1 or y0 >= y1:
        return
    yy, xx = np.ogrid[y0:y1, x0:x1]
    ax, ay = p0
    bx, by = p1
    abx, aby = bx - ax, by - ay
    len2 = abx * abx + aby * aby
    if len2 == 0:
        t = np.zeros((y1 - y0, x1 - x0))
    else:
        t = np.clip(((xx - ax) * abx + (yy - ay) * aby) / len2, 0.0, 1.0)
    dx = xx - (ax + t * abx)
    dy = yy - (ay + t * aby)
    mask = dx * dx + dy * dy <= half_px * half_px
    img[y0:y1, x0:x1][mask] = color


def write_frame(path: str | Path, frame: bytes) -> None:
    Path(path).write_bytes(frame)


# ---------------------------------------------------------------------------
# Frame sequences from a per-robot trajectory CSV
# ---------------------------------------------------------------------------


def frames_from_robot_csv(
    csv_path: str | Path,
    out_dir: str | Path,
    goal: Vec2,
    camera: Optional[Camera] = None,
    contracted_radius: float = 1.0,
    expanded_radius: float = 1.5,
    every: int = 1,
) -> list[str]:
    """Render ``frame_%06d.ppm`` files from a per-robot log.

    The CSV must carry the columns written by the trajectory logger:
    step,robot_id,x,y,vx,vy,radius,state,responsive.  Returns the list of
    file names written, and drops an ``index.json`` next to them.
    """
    from .physics import Actuation, RobotBody  # local import to avoid cycle

    if camera is None:
        camera = Camera(center=goal)
    steps: dict[int, list[dict]] = {}
    with open(csv_path, newline="") as fh:
        for row in csv.DictReader(fh):
            steps.setdefault(int(row["step"]), []).append(row)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[str] = []
    for step in sorted(steps):
        if step % every != 0:
            continue
        rows = sorted(steps[step], key=lambda r: int(r["robot_id"]))
        robots = [
            RobotBody(
                id=int(r["robot_id"]),
                position=Vec2(float(r["x"]), float(r["y"])),
                velocity=Vec2(float(r["vx"]), float(r["vy"])),
                radius=float(r["radius"]),
                target_radius=float(r["radius"]),
                actuation=Actuation(r["state"]),
                responsive=r["responsive"] in ("1", "true", "True"),
            )
            for r in rows
        ]
        world = WorldState(robots=robots, step_count=step)
        name = f"frame_{step:06d}.ppm"
        write_frame(out / name, rasterize_frame(world, goal, camera, contracted_radius, expanded_radius))
        written.append(name)
    (out / "index.json").write_text(
        json.dumps(
            {
                "frames": written,
                "width": camera.width,
                "height": camera.height,
                "scale": camera.scale,
                "center": [camera.center.x, camera.center.y],
            },
            indent=2,
        )
    )
    return written
