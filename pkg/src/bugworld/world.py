"""Level grids, maze generation, kinematic agent physics, pathfinding,
stuck detection and the built-in navigation policy."""

from __future__ import annotations

import heapq
import math
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import Orientation, Vec3

CELL_SIZE = 2.0
WALL_HEIGHT = 2.0
WALL_HALF_THICKNESS = 0.15

AGENT_RADIUS = 0.5
EYE_OFFSET = 0.4
MOVE_SPEED = 3.0
TURN_STEP = 6.0
JUMP_SPEED = 5.0
GRAVITY = 9.81
DT = 1.0 / 30.0
KILL_HEIGHT = -5.0

# action codes are a wire/dataset stability contract
NOOP = 0
FORWARD = 1
BACK = 2
STRAFE_LEFT = 3
STRAFE_RIGHT = 4
TURN_LEFT = 5
TURN_RIGHT = 6
LOOK_UP = 7
LOOK_DOWN = 8
JUMP = 9
INTERACT = 10

ACTION_NAMES = [
    "NOOP", "FORWARD", "BACK", "STRAFE_LEFT", "STRAFE_RIGHT",
    "TURN_LEFT", "TURN_RIGHT", "LOOK_UP", "LOOK_DOWN", "JUMP", "INTERACT",
]
NUM_ACTIONS = len(ACTION_NAMES)
MOVEMENT_ACTIONS = {FORWARD, BACK, STRAFE_LEFT, STRAFE_RIGHT, JUMP}


@dataclass
class LevelGrid:
    """Cell grid with per-edge wall flags. Boundary walls are implicit."""

    width: int
    height: int
    open_e: np.ndarray = None  # (w, h) bool: passage east of (x, y)
    open_n: np.ndarray = None  # (w, h) bool: passage north (+z) of (x, y)
    floor_h: np.ndarray = None  # (w, h) float
    spawn_cell: tuple[int, int] = (0, 0)
    hazard_cells: set = field(default_factory=set)

    def __post_init__(self):
        if self.open_e is None:
            self.open_e = np.zeros((self.width, self.height), dtype=bool)
        if self.open_n is None:
            self.open_n = np.zeros((self.width, self.height), dtype=bool)
        if self.floor_h is None:
            self.floor_h = np.zeros((self.width, self.height), dtype=np.float64)

    def in_range(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def is_open(self, x: int, y: int, dx: int, dy: int) -> bool:
        """Whether the wall between (x, y) and (x+dx, y+dy) is open."""
        nx, ny = x + dx, y + dy
        if not self.in_range(nx, ny):
            return False
        if dx == 1:
            return bool(self.open_e[x, y])
        if dx == -1:
            return bool(self.open_e[nx, ny])
        if dy == 1:
            return bool(self.open_n[x, y])
        return bool(self.open_n[nx, ny])

    def open_edge_count(self) -> int:
        return int(self.open_e.sum() + self.open_n.sum())

    def cell_center(self, x: int, y: int) -> tuple[float, float]:
        return ((x + 0.5) * CELL_SIZE, (y + 0.5) * CELL_SIZE)

    def cell_of(self, wx: float, wz: float) -> tuple[int, int]:
        return (int(math.floor(wx / CELL_SIZE)), int(math.floor(wz / CELL_SIZE)))


def maze_generate(seed: int, width: int, height: int) -> LevelGrid:
    """Perfect maze via iterative recursive backtracking: the open-passage
    graph is a spanning tree of the cell grid."""
    if width < 1 or height < 1:
        raise ValueError("maze dimensions must be >= 1")
    rng = random.Random(seed)
    grid = LevelGrid(width, height)
    visited = np.zeros((width, height), dtype=bool)
    stack = [(0, 0)]
    visited[0, 0] = True
    while stack:
        x, y = stack[-1]
        options = []
        for dx, dy in ((0, -1), (-1, 0), (1, 0), (0, 1)):
            nx, ny = x + dx, y + dy
            if grid.in_range(nx, ny) and not visited[nx, ny]:
                options.append((dx, dy))
        if not options:
            stack.pop()
            continue
        dx, dy = options[rng.randrange(len(options))]
        nx, ny = x + dx, y + dy
        if dx == 1:
            grid.open_e[x, y] = True
        elif dx == -1:
            grid.open_e[nx, ny] = True
        elif dy == 1:
            grid.open_n[x, y] = True
        else:
            grid.open_n[nx, ny] = True
        visited[nx, ny] = True
        stack.append((nx, ny))
    return grid


def open_room(width: int, height: int) -> LevelGrid:
    """Grid with every interior wall open (a plain room)."""
    grid = LevelGrid(width, height)
    grid.open_e[:-1, :] = True
    grid.open_n[:, :-1] = True
    return grid


class NavGrid:
    """4-connected graph over walkable cells induced by a LevelGrid."""

    def __init__(self, grid: LevelGrid):
        self.grid = grid
        self.walkable = [
            (x, y)
            for y in range(grid.height)
            for x in range(grid.width)
            if (x, y) not in grid.hazard_cells
        ]

    def neighbors(self, cell: tuple[int, int]):
        x, y = cell
        # smaller (y, x) first: deterministic tie-breaking for astar
        for dx, dy in ((0, -1), (-1, 0), (1, 0), (0, 1)):
            if self.grid.is_open(x, y, dx, dy):
                n = (x + dx, y + dy)
                if n not in self.grid.hazard_cells:
                    yield n


UNREACHABLE = "UNREACHABLE"


def astar(nav: NavGrid, start: tuple[int, int], goal: tuple[int, int]):
    """Optimal 4-connected path under unit edge cost, Manhattan heuristic,
    deterministic (y, x) tie-breaking. Returns cell list or UNREACHABLE."""
    if not nav.grid.in_range(*start) or not nav.grid.in_range(*goal):
        raise ValueError("cell out of range")
    if start == goal:
        return [start]

    def h(c):
        return abs(c[0] - goal[0]) + abs(c[1] - goal[1])

    openq = [(h(start), start[1], start[0])]
    g = {start: 0}
    came = {}
    closed = set()
    while openq:
        _, cy, cx = heapq.heappop(openq)
        cur = (cx, cy)
        if cur in closed:
            continue
        if cur == goal:
            path = [cur]
            while cur in came:
                cur = came[cur]
                path.append(cur)
            path.reverse()
            return path
        closed.add(cur)
        for n in nav.neighbors(cur):
            ng = g[cur] + 1
            if ng < g.get(n, 1 << 30):
                g[n] = ng
                came[n] = cur
                heapq.heappush(openq, (ng + h(n), n[1], n[0]))
    return UNREACHABLE


def bfs_distance(nav: NavGrid, start, goal):
    """Independent oracle for astar path length."""
    if start == goal:
        return 0
    dist = {start: 0}
    q = deque([start])
    while q:
        cur = q.popleft()
        for n in nav.neighbors(cur):
            if n not in dist:
                dist[n] = dist[cur] + 1
                if n == goal:
                    return dist[n]
                q.append(n)
    return None


@dataclass
class AgentBody:
    position: Vec3
    orientation: Orientation = field(default_factory=Orientation)
    radius: float = AGENT_RADIUS
    vertical_velocity: float = 0.0
    grounded: bool = True

    def eye(self) -> Vec3:
        return Vec3(self.position.x, self.position.y + EYE_OFFSET, self.position.z)

    def snapshot(self):
        return (self.position.x, self.position.y, self.position.z,
                self.orientation.yaw, self.orientation.pitch,
                self.vertical_velocity, self.grounded)

    def restore(self, snap) -> None:
        self.position = Vec3(snap[0], snap[1], snap[2])
        self.orientation = Orientation(snap[3], snap[4])
        self.vertical_velocity = snap[5]
        self.grounded = snap[6]


@dataclass
class WorldState:
    grid: LevelGrid
    walls: list  # [(minx, miny, minz, maxx, maxy, maxz), ...]
    body: AgentBody
    step_count: int = 0
    episode_seed: int = 0
    hole_cells: set = field(default_factory=set)
    no_clip: bool = False
    history: deque = field(default_factory=lambda: deque(maxlen=120))

    def level_bounds(self) -> tuple[float, float, float, float]:
        return (0.0, 0.0, self.grid.width * CELL_SIZE, self.grid.height * CELL_SIZE)

    def floor_height_at(self, wx: float, wz: float) -> Optional[float]:
        cell = self.grid.cell_of(wx, wz)
        if not self.grid.in_range(*cell):
            return None
        if cell in self.hole_cells:
            return None
        return float(self.grid.floor_h[cell])

    def out_of_bounds(self) -> bool:
        p = self.body.position
        x0, z0, x1, z1 = self.level_bounds()
        return p.y < KILL_HEIGHT or p.x < x0 or p.x > x1 or p.z < z0 or p.z > z1


def _resolve_axis(x: float, z: float, r: float, y_lo: float, y_hi: float,
                  walls, axis: int, moved_positive: bool) -> float:
    """Push a horizontal circle out of wall AABBs along one axis."""
    pos = (x, z)
    for (minx, miny, minz, maxx, maxy, maxz) in walls:
        if y_lo >= maxy - 1e-9 or y_hi <= miny + 1e-9:
            continue
        cx = min(max(x, minx), maxx)
        cz = min(max(z, minz), maxz)
        dx = x - cx
        dz = z - cz
        d2 = dx * dx + dz * dz
        if d2 >= r * r:
            continue
        if axis == 0:
            if minz <= z <= maxz:
                x = maxx + r if x >= (minx + maxx) / 2.0 else minx - r
            else:
                off = z - cz
                push = math.sqrt(max(r * r - off * off, 0.0))
                x = cx + push if x >= cx else cx - push
        else:
            if minx <= x <= maxx:
                z = maxz + r if z >= (minz + maxz) / 2.0 else minz - r
            else:
                off = x - cx
                push = math.sqrt(max(r * r - off * off, 0.0))
                z = cz + push if z >= cz else cz - push
    return x if axis == 0 else z


@dataclass
class PhysicsInfo:
    moved: bool = False
    jumped: bool = False
    invalid_action_applied: bool = False


def step_physics(world: WorldState, action: int, dt: float = DT,
                 allow_air_jump: bool = False) -> PhysicsInfo:
    """Advance the agent one fixed timestep. Horizontal motion slides
    along walls via per-axis circle-vs-AABB separation."""
    if not 0 <= action < NUM_ACTIONS:
        raise ValueError(f"invalid action code: {action}")
    body = world.body
    info = PhysicsInfo()

    if action == TURN_LEFT:
        body.orientation.turn(TURN_STEP)
    elif action == TURN_RIGHT:
        body.orientation.turn(-TURN_STEP)
    elif action == LOOK_UP:
        body.orientation.look(TURN_STEP)
    elif action == LOOK_DOWN:
        body.orientation.look(-TURN_STEP)
    elif action == JUMP:
        if body.grounded:
            body.vertical_velocity = JUMP_SPEED
            body.grounded = False
            info.jumped = True
        elif allow_air_jump:
            body.vertical_velocity = JUMP_SPEED
            info.jumped = True
            info.invalid_action_applied = True

    dx = dz = 0.0
    if action in (FORWARD, BACK, STRAFE_LEFT, STRAFE_RIGHT):
        yaw = math.radians(body.orientation.yaw)
        fx, fz = math.sin(yaw), math.cos(yaw)
        # screen-right is forward x up = (-cos yaw, 0, sin yaw)
        rx, rz = -math.cos(yaw), math.sin(yaw)
        step = MOVE_SPEED * dt
        if action == FORWARD:
            dx, dz = fx * step, fz * step
        elif action == BACK:
            dx, dz = -fx * step, -fz * step
        elif action == STRAFE_RIGHT:
            dx, dz = rx * step, rz * step
        else:
            dx, dz = -rx * step, -rz * step
        info.moved = True

    x, z = body.position.x + dx, body.position.z + dz
    if not world.no_clip:
        y_lo = body.position.y - body.radius
        y_hi = body.position.y + body.radius
        x = _resolve_axis(x, body.position.z, body.radius, y_lo, y_hi,
                          world.walls, 0, dx > 0)
        z = _resolve_axis(x, z, body.radius, y_lo, y_hi,
                          world.walls, 1, dz > 0)
        # moving z can re-enter a corner region resolved against the old z
        x = _resolve_axis(x, z, body.radius, y_lo, y_hi,
                          world.walls, 0, dx > 0)
    body.position.x = x
    body.position.z = z

    floor = world.floor_height_at(x, z)
    if body.grounded:
        if floor is None or floor + body.radius < body.position.y - 1e-9:
            body.grounded = False
            body.vertical_velocity = 0.0
    if not body.grounded:
        # velocity-Verlet vertical step: exact free-fall positions on the
        # step grid, so the jump apex matches v^2/2g
        v = body.vertical_velocity
        body.position.y += v * dt - 0.5 * GRAVITY * dt * dt
        body.vertical_velocity = v - GRAVITY * dt
        if (body.vertical_velocity <= 0.0 and floor is not None
                and body.position.y <= floor + body.radius):
            body.position.y = floor + body.radius
            body.vertical_velocity = 0.0
            body.grounded = True

    world.step_count += 1
    world.history.append((body.position.x, body.position.z, action))
    return info


def stuck_detect(history, window: int = 90, eps: float = 0.05) -> bool:
    """True when the agent kept trying to move but went nowhere: over the
    last `window` steps, max pairwise horizontal displacement < eps and at
    least half of those steps issued movement actions."""
    if len(history) < window:
        return False
    recent = list(history)[-window:]
    moves = sum(1 for (_, _, a) in recent if a in MOVEMENT_ACTIONS)
    if moves * 2 < window:
        return False
    xs = [p[0] for p in recent]
    zs = [p[1] for p in recent]
    xr = max(xs) - min(xs)
    zr = max(zs) - min(zs)
    if max(xr, zr) >= eps:
        return False
    if math.hypot(xr, zr) < eps:
        return True
    for i in range(window):
        for j in range(i + 1, window):
            dx = xs[i] - xs[j]
            dz = zs[i] - zs[j]
            if dx * dx + dz * dz >= eps * eps:
                return False
    return True


def _wrap_angle(a: float) -> float:
    return (a + 180.0) % 360.0 - 180.0


class NavAgentPolicy:
    """Walk-and-look-around behaviour: picks random walkable cells,
    follows A* paths to them, with periodic look-around interludes."""

    ARRIVE_DIST = 0.3

    def __init__(self, nav: NavGrid, rng: np.random.Generator):
        self.nav = nav
        self.rng = rng
        self.path: list[tuple[int, int]] = []
        self.path_pos = 0
        self.pending: list[int] = []
        self.goal_queue: list[tuple[int, int]] = []
        self.seen: set = set()
        self.until_lookaround = self._lookaround_interval()

    def _lookaround_interval(self) -> int:
        return 60 + int(self.rng.integers(-20, 21))

    def _lookaround_sequence(self) -> list[int]:
        turn = TURN_LEFT if self.rng.integers(2) == 0 else TURN_RIGHT
        return [LOOK_UP, turn, turn, turn, LOOK_DOWN, LOOK_DOWN,
                turn, turn, turn, LOOK_UP]

    def _sample_goal(self, current):
        """Random goal cell, preferring cells not yet walked through so a
        long rollout spreads over the whole level."""
        fresh = sorted(c for c in self.nav.walkable
                       if c not in self.seen and c != current)
        if fresh:
            return fresh[int(self.rng.integers(len(fresh)))]
        cells = sorted(c for c in self.nav.walkable if c != current)
        if not cells:
            return current
        return cells[int(self.rng.integers(len(cells)))]

    def act(self, world: WorldState) -> int:
        if self.pending:
            return self.pending.pop(0)
        self.until_lookaround -= 1
        if self.until_lookaround <= 0:
            self.until_lookaround = self._lookaround_interval()
            self.pending = self._lookaround_sequence()
            return self.pending.pop(0)

        body = world.body
        cell = world.grid.cell_of(body.position.x, body.position.z)
        if not world.grid.in_range(*cell) or cell in world.grid.hazard_cells:
            return NOOP
        self.seen.add(cell)

        while True:
            if self.path_pos >= len(self.path):
                goal = self._sample_goal(cell)
                path = astar(self.nav, cell, goal)
                if path == UNREACHABLE or len(path) < 2:
                    return NOOP
                self.path = path
                self.path_pos = 1
            waypoint = self.path[self.path_pos]
            tx, tz = world.grid.cell_center(*waypoint)
            dx = tx - body.position.x
            dz = tz - body.position.z
            # entering the waypoint's cell counts as arrival; insisting on
            # the exact center causes endless turn hunting near waypoints
            if math.hypot(dx, dz) < self.ARRIVE_DIST or cell == waypoint:
                self.path_pos += 1
                continue
            break

        desired = math.degrees(math.atan2(dx, dz))
        err = _wrap_angle(desired - body.orientation.yaw)
        if abs(err) > TURN_STEP:
            return TURN_LEFT if err > 0 else TURN_RIGHT
        return FORWARD
