"""Initial world construction for the four benchmark tasks.

A validated ``ScenarioConfig`` deterministically produces the starting
``WorldState``: robots on a square grid around the start point, plus the
task-specific extras (a gate for obstacle navigation, dead robots for the
unresponsive variant, a movable ball for manipulation).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from .physics import (
    Actuation,
    DynamicObject,
    PhysicsParams,
    PhysicsValidationError,
    RobotBody,
    StaticObstacle,
    Vec2,
    WorldState,
    validate_physics_params,
)

# Gate walls extend this far beyond the opening on each side.
GATE_WALL_EXTENT = 30.0
GATE_WALL_THICKNESS = 1.0


class ScenarioError(Exception):
    """Base class for scenario configuration errors."""


class GateTooNarrow(ScenarioError):
    pass


class GateTooWide(ScenarioError):
    pass


class DeadCountInvalid(ScenarioError):
    pass


class BadHorizon(ScenarioError):
    pass


class PhysicsInvalid(ScenarioError):
    """Wraps a physics parameter validation failure."""


class TaskKind(Enum):
    SIMPLE_NAV = "simple_nav"
    OBSTACLE_NAV = "obstacle_nav"
    UNRESPONSIVE_NAV = "unresponsive_nav"
    OBJECT_MANIP = "object_manip"


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to build and run one episode.

    ``dead_seed=None`` derives the dead-robot selection from ``seed`` so
    that benchmark seeds vary the unresponsive layout; set it explicitly
    to pin the selection.
    """

    task: TaskKind = TaskKind.SIMPLE_NAV
    n_robots: int = 25
    grid_spacing: float = 2.1
    start: Vec2 = field(default_factory=lambda: Vec2(0.0, 0.0))
    goal: Vec2 = field(default_factory=lambda: Vec2(40.0, 0.0))
    reward_threshold_d: float = 5.0
    horizon_T: int = 2500
    gamma: float = 0.99
    goal_tolerance: float = 1.0
    run_to_horizon: bool = True
    observe_extras: bool = False
    n_dead: int = 0
    dead_seed: Optional[int] = None
    gate_opening: float = 6.0
    gate_offset: Vec2 = field(default_factory=lambda: Vec2(10.0, 0.0))
    object_radius: float = 2.0
    object_mass: float = 2.0
    physics: PhysicsParams = field(default_factory=PhysicsParams)
    seed: int = 0

    def grid_columns(self) -> int:
        return math.ceil(math.sqrt(self.n_robots))

    def grid_width(self) -> float:
        """Center-to-center span of the spawn grid."""
        return (self.grid_columns() - 1) * self.grid_spacing


def validate_config(config: ScenarioConfig) -> None:
    """Raise a ScenarioError if the configuration is unusable."""
    if config.n_robots < 1:
        raise ScenarioError(f"n_robots must be >= 1, got {config.n_robots}")
    if config.horizon_T < 1:
        raise BadHorizon(f"horizon_T must be >= 1, got {config.horizon_T}")
    if not (0.0 < config.gamma <= 1.0):
        raise ScenarioError(f"gamma must lie in (0, 1], got {config.gamma}")
    if config.grid_spacing <= 0:
        raise ScenarioError("grid_spacing must be positive")
    if config.goal_tolerance <= 0:
        raise ScenarioError("goal_tolerance must be positive")
    if config.reward_threshold_d <= 0:
        raise ScenarioError("reward_threshold_d must be positive")
    if (config.goal - config.start).norm() == 0.0:
        raise ScenarioError("goal must differ from start")
    if config.task is TaskKind.UNRESPONSIVE_NAV:
        if not (0 < config.n_dead < config.n_robots):
            raise DeadCountInvalid(
                f"n_dead must satisfy 0 < n_dead < n_robots, got "
                f"{config.n_dead} of {config.n_robots}"
            )
    elif config.n_dead != 0:
        raise DeadCountInvalid(f"n_dead must be 0 for task {config.task.value}")
    if config.task is TaskKind.OBSTACLE_NAV:
        if config.gate_opening <= 2.0 * config.physics.r_e:
            raise GateTooNarrow(
                f"gate opening {config.gate_opening} must exceed one expanded "
                f"robot width {2.0 * config.physics.r_e}"
            )
        if config.gate_opening >= config.grid_width():
            raise GateTooWide(
                f"gate opening {config.gate_opening} must be below the grid "
                f"width {config.grid_width()}"
            )
    if config.task is TaskKind.OBJECT_MANIP:
        if config.object_radius <= 0 or config.object_mass <= 0:
            raise ScenarioError("object radius and mass must be positive")
    try:
        validate_physics_params(config.physics, config.n_robots)
    except PhysicsValidationError as exc:
        raise PhysicsInvalid(str(exc)) from exc


def build_scenario(config: ScenarioConfig) -> WorldState:
    """Construct the initial world for a validated configuration."""
    validate_config(config)
    phys = config.physics
    cols = config.grid_columns()
    rows = math.ceil(config.n_robots / cols)
    half_w = (cols - 1) * config.grid_spacing / 2.0
    half_h = (rows - 1) * config.grid_spacing / 2.0

    dead: frozenset[int] = frozenset()
    if config.task is TaskKind.UNRESPONSIVE_NAV:
        dead = select_dead_robots(
            config.dead_seed if config.dead_seed is not None else config.seed,
            config.n_robots,
            config.n_dead,
        )

    robots = []
    for i in range(config.n_robots):
        col = i % cols
        row = i // cols
        pos = Vec2(
            config.start.x - half_w + col * config.grid_spacing,
            config.start.y - half_h + row * config.grid_spacing,
        )
        robots.append(
            RobotBody(
                id=i,
                position=pos,
                velocity=Vec2(0.0, 0.0),
                radius=phys.r_c,
                target_radius=phys.r_c,
                actuation=Actuation.IDLE_CONTRACTED,
                responsive=i not in dead,
                mass=phys.robot_mass,
            )
        )

    obstacles: list[StaticObstacle] = []
    if config.task is TaskKind.OBSTACLE_NAV:
        obstacles.append(_build_gate(config))

    obj = None
    if config.task is TaskKind.OBJECT_MANIP:
        obj = _build_object(config, robots)

    return WorldState(robots=robots, object=obj, obstacles=obstacles, step_count=0)


def select_dead_robots(dead_seed: int, n_robots: int, n_dead: int) -> frozenset[int]:
    """Uniform sample without replacement; pure function of its arguments."""
    rng = np.random.Generator(np.random.PCG64(dead_seed))
    picks = rng.choice(n_robots, size=n_dead, replace=False)
    return frozenset(int(i) for i in picks)


def _unit_towards_goal(config: ScenarioConfig) -> Vec2:
    d = config.goal - config.start
    n = d.norm()
    return Vec2(d.x / n, d.y / n)


def _build_gate(config: ScenarioConfig) -> StaticObstacle:
    """Two thick walls perpendicular to the start->goal line.

    The opening of ``gate_opening`` is centered on that line at
    ``start + gate_offset``.
    """
    u = _unit_towards_goal(config)
    p = Vec2(-u.y, u.x)  # perpendicular
    center = config.start + config.gate_offset
    half_open = config.gate_opening / 2.0
    far = half_open + GATE_WALL_EXTENT
    segments = [
        (center + p * half_open, center + p * far),
        (center + p * -half_open, center + p * -far),
    ]
    return StaticObstacle(segments=segments, thickness=GATE_WALL_THICKNESS)


def _build_object(config: ScenarioConfig, robots: list[RobotBody]) -> DynamicObject:
    """Ball tangent to the grid's goal-facing edge, on the start->goal line."""
    u = _unit_towards_goal(config)
    # robot whose center projects furthest toward the goal
    best = max(robots, key=lambda r: (r.position - config.start).dot(u))
    edge = (best.position - config.start).dot(u)
    dist = edge + best.radius + config.object_radius
    return DynamicObject(
        position=config.start + u * dist,
        velocity=Vec2(0.0, 0.0),
        radius=config.object_radius,
        mass=config.object_mass,
    )


# ---------------------------------------------------------------------------
# JSON (de)serialization -- the CLI/server config format
# ---------------------------------------------------------------------------


def config_to_dict(config: ScenarioConfig) -> dict:
    d = asdict(config)
    d["task"] = config.task.value
    d["start"] = [config.start.x, config.start.y]
    d["goal"] = [config.goal.x, config.goal.y]
    d["gate_offset"] = [config.gate_offset.x, config.gate_offset.y]
    d["physics"] = asdict(config.physics)
    return d


def config_from_dict(data: dict) -> ScenarioConfig:
    """Build a ScenarioConfig from a JSON-compatible dict.

    Unknown keys raise, so typos in config files fail loudly.
    """
    known = {f for f in ScenarioConfig.__dataclass_fields__}
    unknown = set(data) - known
    if unknown:
        raise ScenarioError(f"unknown scenario config keys: {sorted(unknown)}")
    kwargs = dict(data)
    if "task" in kwargs:
        try:
            kwargs["task"] = TaskKind(kwargs["task"])
        except ValueError:
            raise ScenarioError(f"unknown task kind: {kwargs['task']!r}")
    for key in ("start", "goal", "gate_offset"):
        if key in kwargs and not isinstance(kwargs[key], Vec2):
            x, y = kwargs[key]
            kwargs[key] = Vec2(float(x), float(y))
    if "physics" in kwargs and not isinstance(kwargs["physics"], PhysicsParams):
        phys = dict(kwargs["physics"])
        unknown_phys = set(phys) - set(PhysicsParams.__dataclass_fields__)
        if unknown_phys:
            raise ScenarioError(f"unknown physics keys: {sorted(unknown_phys)}")
        try:
            kwargs["physics"] = PhysicsParams(**phys)
        except PhysicsValidationError as exc:
            raise PhysicsInvalid(str(exc)) from exc
    try:
        return ScenarioConfig(**kwargs)
    except PhysicsValidationError as exc:
        raise PhysicsInvalid(str(exc)) from exc


def config_digest(config: ScenarioConfig) -> str:
    """Stable content hash of a configuration."""
    canonical = json.dumps(config_to_dict(config), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()


def with_overrides(config: ScenarioConfig, **changes) -> ScenarioConfig:
    return replace(config, **changes)
