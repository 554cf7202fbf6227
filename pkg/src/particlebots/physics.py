"""Deterministic fixed-timestep 2D dynamics for expansion-disc robots.

Robots are discs that can only grow or shrink their radius between two
extremes.  Locomotion of a swarm emerges from three ingredients: contact
impulses when an expanding disc pushes its neighbours, a constant-magnitude
magnetic attraction that keeps the swarm cohesive, and Coulomb friction
against the ground that rectifies the resulting oscillations.

Everything here is deterministic: bodies are iterated by index, contact
pairs lexicographically, and the solver runs a fixed number of iterations,
so identical inputs produce bit-identical world states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

import numba
import numpy as np

# Fixed solver schedule (per substep).  Kept as module constants rather than
# PhysicsParams fields so that two configs with equal fields can never
# disagree on solver behaviour.  The solver uses simultaneous (Jacobi-style)
# updates with per-contact relaxation so that geometrically symmetric worlds
# evolve symmetrically to rounding error; that needs more iterations than a
# sequential sweep would, hence the generous budgets.
VELOCITY_ITERATIONS = 32
POSITION_ITERATIONS = 128


class PhysicsError(Exception):
    """Base class for physics-layer errors."""


class PhysicsValidationError(PhysicsError):
    """A parameter set violates a structural constraint."""


class FrictionDominates(PhysicsValidationError):
    """Friction on a single robot exceeds the cohesion force.

    No robot could ever be dragged along by its neighbours.
    """


class CohesionDominates(PhysicsValidationError):
    """Cohesion exceeds the combined friction of the other robots.

    The swarm would slide around as one rigid block instead of deforming.
    """


class CommandLengthMismatch(PhysicsError):
    """Number of actuation commands does not match the robot count."""


class Command(Enum):
    EXPAND = "expand"
    CONTRACT = "contract"


class Actuation(Enum):
    IDLE_CONTRACTED = "idle_contracted"
    EXPANDING = "expanding"
    IDLE_EXPANDED = "idle_expanded"
    CONTRACTING = "contracting"


@dataclass(frozen=True)
class Vec2:
    """A 2D point or vector in world length units."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite Vec2 components: ({self.x}, {self.y})")

    def __add__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x - other.x, self.y - other.y)

    def __mul__(self, s: float) -> "Vec2":
        return Vec2(self.x * s, self.y * s)

    __rmul__ = __mul__

    def dot(self, other: "Vec2") -> float:
        return self.x * other.x + self.y * other.y

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass
class RobotBody:
    """One particle robot: a disc with a two-state radius actuator."""

    id: int
    position: Vec2
    velocity: Vec2
    radius: float
    target_radius: float
    actuation: Actuation
    responsive: bool = True
    mass: float = 1.0


@dataclass(frozen=True)
class PhysicsParams:
    """Constants governing the dynamics.

    ``dt`` is the substep duration; one environment step advances
    ``substeps_per_env_step`` substeps.  A full expansion or contraction
    takes ``tau_act`` environment steps.
    """

    dt: float = 1.0 / 60.0
    substeps_per_env_step: int = 4
    r_c: float = 1.0
    r_e: float = 1.5
    tau_act: int = 5
    mu: float = 0.1
    gravity_g: float = 9.8
    f_mag: float = 3.0
    g_max: float = 0.5
    restitution: float = 0.0
    baumgarte_beta: float = 0.2
    slop: float = 0.01
    velocity_epsilon: float = 1e-3
    robot_mass: float = 1.0

    def __post_init__(self):
        positive = {
            "dt": self.dt,
            "substeps_per_env_step": self.substeps_per_env_step,
            "r_c": self.r_c,
            "r_e": self.r_e,
            "tau_act": self.tau_act,
            "mu": self.mu,
            "gravity_g": self.gravity_g,
            "f_mag": self.f_mag,
            "g_max": self.g_max,
            "baumgarte_beta": self.baumgarte_beta,
            "slop": self.slop,
            "velocity_epsilon": self.velocity_epsilon,
            "robot_mass": self.robot_mass,
        }
        for name, value in positive.items():
            if not value > 0:
                raise PhysicsValidationError(f"{name} must be positive, got {value}")
        if not (0.0 <= self.restitution < 1.0):
            raise PhysicsValidationError(
                f"restitution must lie in [0, 1), got {self.restitution}"
            )
        if not self.r_c < self.r_e:
            raise PhysicsValidationError(
                f"contracted radius must be below expanded ({self.r_c} >= {self.r_e})"
            )
        if not self.slop < self.r_c / 10.0:
            raise PhysicsValidationError(
                f"slop {self.slop} too large for contracted radius {self.r_c}"
            )

    @property
    def friction_limit(self) -> float:
        """Coulomb friction bound for one robot of the uniform mass."""
        return self.mu * self.robot_mass * self.gravity_g


@dataclass
class StaticObstacle:
    """An immovable obstacle made of thick line segments (capsules)."""

    segments: list[tuple[Vec2, Vec2]]
    thickness: float = 1.0

    def __post_init__(self):
        if not self.segments:
            raise ValueError("obstacle needs at least one segment")
        if self.thickness <= 0:
            raise ValueError("obstacle thickness must be positive")


@dataclass
class DynamicObject:
    """A movable disc, e.g. the ball of the manipulation task."""

    position: Vec2
    velocity: Vec2
    radius: float
    mass: float

    def __post_init__(self):
        if self.radius <= 0 or self.mass <= 0:
            raise ValueError("object radius and mass must be positive")


@dataclass
class WorldState:
    """Complete dynamic state of the simulated world."""

    robots: list[RobotBody]
    object: Optional[DynamicObject] = None
    obstacles: list[StaticObstacle] = field(default_factory=list)
    step_count: int = 0


def validate_physics_params(params: PhysicsParams, n_robots: int) -> None:
    """Check the force-range constraint for a swarm of ``n_robots``.

    The cohesion force must be strong enough to drag one robot against its
    ground friction, yet weak enough that the rest of the swarm can anchor
    against it:  F_f < f_mag < (n-1) * F_f, strictly, with uniform mass.

    Raises FrictionDominates or CohesionDominates naming the violated side.
    """
    if n_robots < 1:
        raise PhysicsValidationError(f"n_robots must be >= 1, got {n_robots}")
    f_f = params.friction_limit
    if not f_f < params.f_mag:
        raise FrictionDominates(
            f"friction limit {f_f:.6g} >= cohesion force {params.f_mag:.6g}; "
            "no robot could ever be dragged by its neighbours"
        )
    upper = (n_robots - 1) * f_f
    if not params.f_mag < upper:
        raise CohesionDominates(
            f"cohesion force {params.f_mag:.6g} >= combined friction "
            f"{upper:.6g} of the other {n_robots - 1} robots; the swarm "
            "would slide as a rigid block"
        )


def apply_actuation_command(
    robot: RobotBody, command: Command, params: PhysicsParams
) -> RobotBody:
    """Latch an expand/contract command onto a robot.

    Commands are void while the robot is mid-actuation, when it is already
    in the commanded state, or when the robot is unresponsive.
    """
    if not robot.responsive:
        return robot
    if robot.actuation is Actuation.IDLE_CONTRACTED and command is Command.EXPAND:
        return replace(robot, target_radius=params.r_e, actuation=Actuation.EXPANDING)
    if robot.actuation is Actuation.IDLE_EXPANDED and command is Command.CONTRACT:
        return replace(robot, target_radius=params.r_c, actuation=Actuation.CONTRACTING)
    return robot


def pairwise_magnetic_force(
    a: RobotBody, b: RobotBody, params: PhysicsParams
) -> tuple[Vec2, Vec2]:
    """Constant-magnitude attraction between two robots within the cutoff gap.

    Returns (force_on_a, force_on_b).  Zero when the surface gap is negative
    (contact impulses take over) or beyond ``g_max``, and zero for coincident
    centers where the direction is degenerate.
    """
    d = b.position - a.position
    dist = d.norm()
    if dist == 0.0:
        return Vec2(0.0, 0.0), Vec2(0.0, 0.0)
    gap = dist - (a.radius + b.radius)
    if gap < 0.0 or gap > params.g_max:
        return Vec2(0.0, 0.0), Vec2(0.0, 0.0)
    scale = params.f_mag / dist
    f = Vec2(d.x * scale, d.y * scale)
    return f, Vec2(-f.x, -f.y)


def ground_friction(
    velocity: Vec2, applied_force: Vec2, mass: float, params: PhysicsParams
) -> Vec2:
    """Coulomb ground friction for a body of the given mass.

    Kinetic regime (speed above ``velocity_epsilon``): a force of fixed
    magnitude opposing motion.  Static regime: exactly cancels the applied
    force up to the friction limit, then caps at the limit.
    """
    if mass <= 0:
        raise ValueError("mass must be positive")
    limit = params.mu * mass * params.gravity_g
    speed = velocity.norm()
    if speed > params.velocity_epsilon:
        s = -limit / speed
        return Vec2(velocity.x * s, velocity.y * s)
    f = applied_force.norm()
    if f <= limit:
        return Vec2(-applied_force.x, -applied_force.y)
    s = -limit / f
    return Vec2(applied_force.x * s, applied_force.y * s)


# ---------------------------------------------------------------------------
# Engine internals
# ---------------------------------------------------------------------------
#
# Bodies are packed into flat arrays (robots first, the movable object last)
# and stepped with numpy for the broad phase and force stage; the contact
# solver proper runs as compiled sequential-impulse loops so that deep
# contact chains converge within the fixed iteration budget.

_ACT_CODE = {
    Actuation.IDLE_CONTRACTED: 0,
    Actuation.EXPANDING: 1,
    Actuation.IDLE_EXPANDED: 2,
    Actuation.CONTRACTING: 3,
}
_ACT_FROM_CODE = {v: k for k, v in _ACT_CODE.items()}


class _Bodies:
    """Flat array view of all movable bodies: robots first, object last."""

    def __init__(self, world: WorldState, params: PhysicsParams):
        self.n_robots = len(world.robots)
        self.has_object = world.object is not None
        n = self.n_robots + (1 if self.has_object else 0)
        self.pos = np.empty((n, 2))
        self.vel = np.empty((n, 2))
        self.radius = np.empty(n)
        self.mass = np.empty(n)
        self.rdot = np.zeros(n)
        for i, r in enumerate(world.robots):
            self.pos[i] = (r.position.x, r.position.y)
            self.vel[i] = (r.velocity.x, r.velocity.y)
            self.radius[i] = r.radius
            self.mass[i] = r.mass
        self.target = np.array([r.target_radius for r in world.robots])
        self.act = np.array([_ACT_CODE[r.actuation] for r in world.robots])
        if self.has_object:
            o = world.object
            self.pos[-1] = (o.position.x, o.position.y)
            self.vel[-1] = (o.velocity.x, o.velocity.y)
            self.radius[-1] = o.radius
            self.mass[-1] = o.mass
        self.inv_mass = 1.0 / self.mass
        # Obstacle capsules flattened across all StaticObstacle groups.
        segs_a, segs_b, half_w = [], [], []
        for obs in world.obstacles:
            for (a, b) in obs.segments:
                segs_a.append((a.x, a.y))
                segs_b.append((b.x, b.y))
                half_w.append(obs.thickness / 2.0)
        self.seg_a = np.array(segs_a) if segs_a else np.empty((0, 2))
        self.seg_b = np.array(segs_b) if segs_b else np.empty((0, 2))
        self.seg_half = np.array(half_w)

    def unpack(self, world: WorldState) -> WorldState:
        robots = []
        for i, r in enumerate(world.robots):
            robots.append(
                RobotBody(
                    id=r.id,
                    position=Vec2(float(self.pos[i, 0]), float(self.pos[i, 1])),
                    velocity=Vec2(float(self.vel[i, 0]), float(self.vel[i, 1])),
                    radius=float(self.radius[i]),
                    target_radius=float(self.target[i]),
                    actuation=_ACT_FROM_CODE[int(self.act[i])],
                    responsive=r.responsive,
                    mass=r.mass,
                )
            )
        obj = None
        if self.has_object:
            obj = DynamicObject(
                position=Vec2(float(self.pos[-1, 0]), float(self.pos[-1, 1])),
                velocity=Vec2(float(self.vel[-1, 0]), float(self.vel[-1, 1])),
                radius=float(self.radius[-1]),
                mass=float(self.mass[-1]),
            )
        return WorldState(
            robots=robots,
            object=obj,
            obstacles=world.obstacles,
            step_count=world.step_count,
        )


def _update_radii(b: _Bodies, params: PhysicsParams) -> None:
    """Interpolate radii toward targets, latching idle on arrival.

    Expansion pauses while a robot is pressed against a static obstacle:
    the paddle motors cannot move an immovable wall, so they stall rather
    than rebound the whole swarm (contraction always proceeds).
    """
    rate = (params.r_e - params.r_c) / (params.tau_act * params.substeps_per_env_step)
    nr = b.n_robots
    old = b.radius[:nr].copy()
    expanding = b.act == 1
    if b.seg_a.shape[0] and np.any(expanding):
        expanding = expanding & ~_wall_pressed(b, params)
    contracting = b.act == 3
    r = b.radius[:nr]
    r[expanding] = np.minimum(r[expanding] + rate, b.target[expanding])
    r[contracting] = np.maximum(r[contracting] - rate, b.target[contracting])
    arrived = (expanding | contracting) & (r == b.target)
    b.act[arrived & expanding] = 2
    b.act[arrived & contracting] = 0
    b.rdot[:nr] = (r - old) / params.dt


def _wall_pressed(b: _Bodies, params: PhysicsParams) -> np.ndarray:
    """Robots overlapping a static obstacle beyond the slop."""
    nr = b.n_robots
    closest = _segment_closest_points(b.pos[:nr], b.seg_a, b.seg_b)
    d = b.pos[:nr, None, :] - closest
    dist = np.sqrt(np.sum(d * d, axis=2))
    pen = (b.radius[:nr, None] + b.seg_half[None, :]) - dist
    return np.max(pen, axis=1) > params.slop


def _magnetic_forces(b: _Bodies, params: PhysicsParams) -> np.ndarray:
    """Net constant-magnitude attraction on each body (robots only)."""
    forces = np.zeros_like(b.pos)
    nr = b.n_robots
    if nr < 2:
        return forces
    p = b.pos[:nr]
    diff = p[None, :, :] - p[:, None, :]  # diff[i, j] points i -> j
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    rsum = b.radius[:nr][None, :] + b.radius[:nr][:, None]
    gap = dist - rsum
    np.fill_diagonal(dist, np.inf)
    mask = (gap >= 0.0) & (gap <= params.g_max)
    scale = np.where(mask, params.f_mag / dist, 0.0)
    forces[:nr] = np.sum(diff * scale[:, :, None], axis=1)
    return forces


def _friction_forces(b: _Bodies, applied: np.ndarray, params: PhysicsParams) -> np.ndarray:
    """Vectorized Coulomb friction; mirrors ``ground_friction`` per body."""
    limit = params.mu * b.mass * params.gravity_g
    speed = np.sqrt(np.sum(b.vel * b.vel, axis=1))
    out = np.zeros_like(b.vel)
    kinetic = speed > params.velocity_epsilon
    if np.any(kinetic):
        s = -limit[kinetic] / speed[kinetic]
        out[kinetic] = b.vel[kinetic] * s[:, None]
    static = ~kinetic
    if np.any(static):
        f = np.sqrt(np.sum(applied[static] * applied[static], axis=1))
        cap = limit[static]
        scale = np.where(f <= cap, -1.0, -cap / np.where(f > 0, f, 1.0))
        out[static] = applied[static] * scale[:, None]
    return out


def _find_contacts(b: _Bodies) -> tuple[np.ndarray, np.ndarray]:
    """Detect penetrating pairs in deterministic lexicographic order.

    Returns (ia, ib); ``ib >= 0`` names a dynamic partner, ``ib < 0``
    encodes obstacle segment ``-1 - ib``.
    """
    n = b.pos.shape[0]
    ia_list: list[np.ndarray] = []
    ib_list: list[np.ndarray] = []
    if n >= 2:
        iu, ju = np.triu_indices(n, k=1)
        d = b.pos[ju] - b.pos[iu]
        dist_sq = np.sum(d * d, axis=1)
        rsum = b.radius[iu] + b.radius[ju]
        hit = dist_sq < rsum * rsum
        ia_list.append(iu[hit])
        ib_list.append(ju[hit])
    if b.seg_a.shape[0]:
        closest = _segment_closest_points(b.pos, b.seg_a, b.seg_b)  # (n, s, 2)
        d = b.pos[:, None, :] - closest
        dist_sq = np.sum(d * d, axis=2)
        rsum = b.radius[:, None] + b.seg_half[None, :]
        bi, si = np.nonzero(dist_sq < rsum * rsum)
        ia_list.append(bi)
        ib_list.append(-1 - si)
    if not ia_list:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    return (
        np.concatenate(ia_list).astype(np.int64),
        np.concatenate(ib_list).astype(np.int64),
    )


def _segment_closest_points(p: np.ndarray, a: np.ndarray, bseg: np.ndarray) -> np.ndarray:
    ab = bseg - a  # (s, 2)
    ab_len2 = np.sum(ab * ab, axis=1)
    ab_len2 = np.where(ab_len2 > 0, ab_len2, 1.0)
    ap = p[:, None, :] - a[None, :, :]  # (n, s, 2)
    t = np.sum(ap * ab[None, :, :], axis=2) / ab_len2[None, :]
    t = np.clip(t, 0.0, 1.0)
    return a[None, :, :] + t[:, :, None] * ab[None, :, :]


@numba.njit(cache=True)
def _solve_contacts_kernel(
    pos: np.ndarray,
    vel: np.ndarray,
    radius: np.ndarray,
    rdot: np.ndarray,
    inv_mass: np.ndarray,
    ia: np.ndarray,
    ib: np.ndarray,
    seg_a: np.ndarray,
    seg_b: np.ndarray,
    seg_half: np.ndarray,
    restitution: float,
    beta: float,
    slop: float,
    track: np.ndarray,
) -> None:
    """Iterative contact resolution: velocity impulses, then positions.

    Each iteration evaluates every contact against a snapshot of the state
    and only then applies the batched corrections, so symmetric contact
    configurations receive exactly symmetric treatment regardless of the
    contact ordering.  Per-contact relaxation by contact degree keeps the
    simultaneous update stable.
    """
    k = ia.shape[0]
    n_bodies = pos.shape[0]
    nx = np.empty(k)
    ny = np.empty(k)
    denom = np.empty(k)
    rsum_dot = np.empty(k)
    target = np.empty(k)
    omega = np.empty(k)
    accum = np.zeros(k)
    dlam = np.empty(k)

    deg = np.zeros(n_bodies)
    for c in range(k):
        deg[ia[c]] += 1.0
        if ib[c] >= 0:
            deg[ib[c]] += 1.0

    for c in range(k):
        a = ia[c]
        bpart = ib[c]
        if bpart >= 0:
            dx = pos[bpart, 0] - pos[a, 0]
            dy = pos[bpart, 1] - pos[a, 1]
            inv_b = inv_mass[bpart]
            rsum_dot[c] = rdot[a] + rdot[bpart]
            d = max(deg[a], deg[bpart])
        else:
            s = -1 - bpart
            cx, cy = _closest_on_segment(
                pos[a, 0], pos[a, 1],
                seg_a[s, 0], seg_a[s, 1], seg_b[s, 0], seg_b[s, 1],
            )
            dx = cx - pos[a, 0]
            dy = cy - pos[a, 1]
            inv_b = 0.0
            rsum_dot[c] = rdot[a]
            d = deg[a]
        dist = math.sqrt(dx * dx + dy * dy)
        if dist > 0.0:
            nx[c] = dx / dist
            ny[c] = dy / dist
        else:
            nx[c] = 0.0
            ny[c] = 0.0
        denom[c] = inv_mass[a] + inv_b
        if denom[c] <= 0.0:
            denom[c] = 1.0
        omega[c] = 1.0 / d if d > 1.0 else 1.0
        # restitution target from the pre-solve approach rate
        if bpart >= 0:
            rvx = vel[bpart, 0] - vel[a, 0]
            rvy = vel[bpart, 1] - vel[a, 1]
        else:
            rvx = -vel[a, 0]
            rvy = -vel[a, 1]
        rate0 = rvx * nx[c] + rvy * ny[c] - rsum_dot[c]
        target[c] = -restitution * min(rate0, 0.0)

    for _ in range(VELOCITY_ITERATIONS):
        for c in range(k):
            a = ia[c]
            bpart = ib[c]
            if bpart >= 0:
                rvx = vel[bpart, 0] - vel[a, 0]
                rvy = vel[bpart, 1] - vel[a, 1]
            else:
                rvx = -vel[a, 0]
                rvy = -vel[a, 1]
            rate = rvx * nx[c] + rvy * ny[c] - rsum_dot[c]
            want = omega[c] * (target[c] - rate) / denom[c]
            new_accum = accum[c] + want
            if new_accum < 0.0:
                new_accum = 0.0
            dlam[c] = new_accum - accum[c]
            accum[c] = new_accum
        for c in range(k):
            if dlam[c] == 0.0:
                continue
            a = ia[c]
            bpart = ib[c]
            ix = dlam[c] * nx[c]
            iy = dlam[c] * ny[c]
            vel[a, 0] -= ix * inv_mass[a]
            vel[a, 1] -= iy * inv_mass[a]
            if bpart >= 0:
                vel[bpart, 0] += ix * inv_mass[bpart]
                vel[bpart, 1] += iy * inv_mass[bpart]
                track[a, 0] -= ix
                track[a, 1] -= iy
                track[bpart, 0] += ix
                track[bpart, 1] += iy

    ux = np.empty(k)
    uy = np.empty(k)
    for _ in range(POSITION_ITERATIONS):
        moved = False
        for c in range(k):
            a = ia[c]
            bpart = ib[c]
            if bpart >= 0:
                dx = pos[bpart, 0] - pos[a, 0]
                dy = pos[bpart, 1] - pos[a, 1]
                rsum = radius[a] + radius[bpart]
                inv_b = inv_mass[bpart]
            else:
                s = -1 - bpart
                cx, cy = _closest_on_segment(
                    pos[a, 0], pos[a, 1],
                    seg_a[s, 0], seg_a[s, 1], seg_b[s, 0], seg_b[s, 1],
                )
                dx = cx - pos[a, 0]
                dy = cy - pos[a, 1]
                rsum = radius[a] + seg_half[s]
                inv_b = 0.0
            dist = math.sqrt(dx * dx + dy * dy)
            err = rsum - dist - slop
            if err <= 0.0 or dist <= 0.0:
                dlam[c] = 0.0
                continue
            moved = True
            dlam[c] = beta * omega[c] * err / (inv_mass[a] + inv_b)
            ux[c] = dx / dist
            uy[c] = dy / dist
        if not moved:
            break
        for c in range(k):
            if dlam[c] == 0.0:
                continue
            a = ia[c]
            bpart = ib[c]
            pos[a, 0] -= ux[c] * dlam[c] * inv_mass[a]
            pos[a, 1] -= uy[c] * dlam[c] * inv_mass[a]
            if bpart >= 0:
                pos[bpart, 0] += ux[c] * dlam[c] * inv_mass[bpart]
                pos[bpart, 1] += uy[c] * dlam[c] * inv_mass[bpart]


@numba.njit(cache=True, inline="always")
def _closest_on_segment(px, py, ax, ay, bx, by):
    abx = bx - ax
    aby = by - ay
    len2 = abx * abx + aby * aby
    if len2 <= 0.0:
        return ax, ay
    t = ((px - ax) * abx + (py - ay) * aby) / len2
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    return ax + t * abx, ay + t * aby


def _resolve(b: _Bodies, params: PhysicsParams, track: Optional[np.ndarray]) -> None:
    ia, ib = _find_contacts(b)
    if ia.shape[0] == 0:
        return
    if track is None:
        track = np.zeros_like(b.pos)
    _solve_contacts_kernel(
        b.pos, b.vel, b.radius, b.rdot, b.inv_mass,
        ia, ib, b.seg_a, b.seg_b, b.seg_half,
        params.restitution, params.baumgarte_beta, params.slop, track,
    )


def resolve_contacts(world: WorldState, params: PhysicsParams) -> WorldState:
    """Resolve all current contacts once (impulses, then positional correction).

    Standalone entry point; ``step_world`` calls the same solver every
    substep.  Non-overlapping worlds are returned unchanged.
    """
    b = _Bodies(world, params)
    _resolve(b, params, None)
    return b.unpack(world)


def _substep(b: _Bodies, params: PhysicsParams, track: Optional[np.ndarray]) -> None:
    _update_radii(b, params)
    applied = _magnetic_forces(b, params)
    friction = _friction_forces(b, applied, params)
    b.vel += (applied + friction) * (params.dt * b.inv_mass[:, None])
    b.pos += b.vel * params.dt
    _resolve(b, params, track)


def step_world(
    world: WorldState,
    commands: Sequence[Command],
    params: PhysicsParams,
    diagnostics: Optional[dict] = None,
) -> WorldState:
    """Advance the world by one environment step.

    Latches the per-robot commands, then runs the configured number of
    physics substeps.  The input world is not mutated.  When a
    ``diagnostics`` dict is supplied, ``internal_impulse_balance`` records
    the largest magnitude of the summed internal contact impulses over the
    substeps (action/reaction bookkeeping should cancel exactly).
    """
    if len(commands) != len(world.robots):
        raise CommandLengthMismatch(
            f"got {len(commands)} commands for {len(world.robots)} robots"
        )
    staged = WorldState(
        robots=[
            apply_actuation_command(r, c, params)
            for r, c in zip(world.robots, commands)
        ],
        object=world.object,
        obstacles=world.obstacles,
        step_count=world.step_count,
    )
    b = _Bodies(staged, params)
    track = None
    worst = 0.0
    if diagnostics is not None:
        track = np.zeros_like(b.pos)
    for _ in range(params.substeps_per_env_step):
        if track is not None:
            track[:] = 0.0
        _substep(b, params, track)
        if track is not None:
            total = np.sum(track, axis=0)
            worst = max(worst, float(np.hypot(total[0], total[1])))
    if diagnostics is not None:
        diagnostics["internal_impulse_balance"] = worst
    out = b.unpack(staged)
    out.step_count = world.step_count + 1
    return out


def max_penetration(world: WorldState, params: PhysicsParams) -> float:
    """Deepest pairwise overlap in the world (0 when separated)."""
    b = _Bodies(world, params)
    worst = 0.0
    n = b.pos.shape[0]
    if n >= 2:
        iu, ju = np.triu_indices(n, k=1)
        d = b.pos[ju] - b.pos[iu]
        dist = np.sqrt(np.sum(d * d, axis=1))
        overlap = (b.radius[iu] + b.radius[ju]) - dist
        if overlap.size:
            worst = max(worst, float(np.max(overlap)))
    if b.seg_a.shape[0]:
        closest = _segment_closest_points(b.pos, b.seg_a, b.seg_b)
        d = b.pos[:, None, :] - closest
        dist = np.sqrt(np.sum(d * d, axis=2))
        overlap = (b.radius[:, None] + b.seg_half[None, :]) - dist
        worst = max(worst, float(np.max(overlap)))
    return worst
