"""MicroCiv game rules.

A two-player race to tech level 8 on a small grid.  Everything is
deterministic: integer arithmetic only, fixed processing order, no
random transitions (the seed is recorded on the state for provenance
but the rules never draw from it).

Mechanics in brief:

* Terrain is grass / hills / water.  Land tiles can be improved by a
  worker; improvements add one yield point.
* A turn has two phases, player 0 then player 1.  Ending a phase
  applies that player's city yields, growth, production and research;
  after player 1's phase the turn counter increments.
* Cities collect food and production from their own tile plus the 8
  neighbours (grass feeds, hills produce), grow when the food store
  fills, and build one item at a time.  Science and gold scale with
  population; the research focus doubles science or production.
* Units move one tile per turn.  At most one unit per tile, except any
  number on a friendly city tile.  Founding a city consumes the
  settler.  Combat compares hit points: the attacker wins only on
  strictly greater hp, otherwise the attacker dies.  Warriors get +1 hp
  per tech level at build time.  Attacking a city without a garrison
  reduces its population; at zero the city is destroyed.
* Fog of war: each player permanently explores everything within
  Chebyshev distance 2 of its units and cities.  Enemy pieces are
  visible only within that radius of a friendly piece.

A player whose units and cities are all gone is destroyed; the first
player to reach tech level ``T_MAX`` wins the race (player 0's phase
runs first, so it wins same-turn ties).
"""

from __future__ import annotations

import copy
import hashlib
import json
import logging
import re
from dataclasses import dataclass, field
from functools import lru_cache

logger = logging.getLogger(__name__)

GRASS, HILLS, WATER = "grass", "hills", "water"
TERRAIN_CHARS = {"G": GRASS, "H": HILLS, "W": WATER}

UNIT_KINDS = ("settler", "worker", "warrior")
BUILDINGS = ("granary", "library")
BUILD_COSTS = {"warrior": 10, "worker": 12, "settler": 24, "granary": 20, "library": 24}
BASE_HP = {"settler": 1, "worker": 1, "warrior": 3}

FOCUS_KINDS = ("balanced", "science", "production")

T_MAX = 8
TECH_COST_PER_LEVEL = 60
GROWTH_BASE = 10
CITY_MIN_SPACING = 2
VISION_RADIUS = 2

DIRECTIONS = {
    "n": (0, -1), "ne": (1, -1), "e": (1, 0), "se": (1, 1),
    "s": (0, 1), "sw": (-1, 1), "w": (-1, 0), "nw": (-1, -1),
}
DIR_ORDER = ("n", "ne", "e", "se", "s", "sw", "w", "nw")


@dataclass
class Unit:
    id: int
    kind: str
    x: int
    y: int
    hp: int
    moves_left: int = 1


@dataclass
class City:
    id: int
    x: int
    y: int
    population: int = 1
    food_store: int = 0
    buildings: set = field(default_factory=set)
    production: str = ""
    progress: int = 0


@dataclass
class PlayerState:
    units: dict = field(default_factory=dict)
    cities: dict = field(default_factory=dict)
    science: int = 0
    gold: int = 0
    tech_level: int = 0
    focus: str = "balanced"
    explored: set = field(default_factory=set)

    @property
    def alive(self) -> bool:
        return bool(self.units) or bool(self.cities)


@dataclass
class GameState:
    fixture: str
    width: int
    height: int
    terrain: tuple  # tuple of terrain-name rows (tuples)
    improved: set
    players: list
    turn: int = 0
    phase: int = 0
    next_id: int = 1
    winner: int | None = None
    seed: int = 0
    version: int = 0  # bumped by every applied command


@dataclass(frozen=True)
class MapFixture:
    name: str
    width: int
    height: int
    terrain: tuple
    starts: tuple  # ((x, y), (x, y))


class FixtureError(Exception):
    pass


class CommandError(Exception):
    """A command text could not be parsed."""


@dataclass(frozen=True)
class Command:
    verb: str  # move | found_city | build | research_focus | attack | end_turn
    unit: int | None = None
    city: int | None = None
    direction: str | None = None
    item: str | None = None
    focus: str | None = None

    def to_text(self) -> str:
        if self.verb == "move":
            return f"unit {self.unit}; move {self.direction}"
        if self.verb == "found_city":
            return f"unit {self.unit}; press b"
        if self.verb == "attack":
            return f"unit {self.unit}; attack {self.direction}"
        if self.verb == "build" and self.unit is not None:
            return f"unit {self.unit}; build {self.item}"
        if self.verb == "build":
            return f"city {self.city}; build {self.item}"
        if self.verb == "research_focus":
            return f"player; focus {self.focus}"
        if self.verb == "end_turn":
            return "end turn"
        raise ValueError(f"unprintable command {self!r}")


_UNIT_CMD_RE = re.compile(r"^unit\s+(\d+)\s*;\s*(.+)$")
_CITY_CMD_RE = re.compile(r"^city\s+(\d+)\s*;\s*build\s+([a-z]+)$")
_PLAYER_CMD_RE = re.compile(r"^player\s*;\s*focus\s+([a-z]+)$")


def parse_command_text(text: str) -> Command:
    """Parse a command line of the forms the action handler accepts.

    ``unit 12; press b`` founds a city, ``unit 12; move ne`` moves,
    ``unit 12; attack n`` attacks, ``unit 12; build farm`` improves the
    tile, ``city 3; build warrior`` queues production, ``player; focus
    science`` switches the research focus, ``end turn`` ends the turn.
    """
    line = text.strip().lower()
    if line == "end turn":
        return Command("end_turn")
    m = _UNIT_CMD_RE.match(line)
    if m:
        uid, rest = int(m.group(1)), m.group(2).strip()
        if rest == "press b":
            return Command("found_city", unit=uid)
        if rest.startswith("move "):
            d = rest[5:].strip()
            if d not in DIRECTIONS:
                raise CommandError(f"unknown direction {d!r}")
            return Command("move", unit=uid, direction=d)
        if rest.startswith("attack "):
            d = rest[7:].strip()
            if d not in DIRECTIONS:
                raise CommandError(f"unknown direction {d!r}")
            return Command("attack", unit=uid, direction=d)
        if rest == "build farm":
            return Command("build", unit=uid, item="farm")
        raise CommandError(f"unknown unit command {rest!r}")
    m = _CITY_CMD_RE.match(line)
    if m:
        item = m.group(2)
        if item not in BUILD_COSTS:
            raise CommandError(f"unknown build item {item!r}")
        return Command("build", city=int(m.group(1)), item=item)
    m = _PLAYER_CMD_RE.match(line)
    if m:
        focus = m.group(1)
        if focus not in FOCUS_KINDS:
            raise CommandError(f"unknown focus {focus!r}")
        return Command("research_focus", focus=focus)
    raise CommandError(f"cannot parse command {text!r}")


# --- fixtures -------------------------------------------------------------------


def parse_fixture(text: str, name: str = "") -> MapFixture:
    """Parse a map fixture: header lines then one row of terrain chars per line."""
    starts: dict[int, tuple[int, int]] = {}
    rows = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if ":" in line and not set(line.split(":", 1)[0]) <= set("GHW"):
            key, value = (p.strip() for p in line.split(":", 1))
            if key == "name":
                name = value
            elif key in ("agent", "opponent"):
                x, y = (int(v) for v in value.split(","))
                starts[0 if key == "agent" else 1] = (x, y)
            else:
                raise FixtureError(f"unknown fixture header {key!r}")
        else:
            bad = set(line) - set(TERRAIN_CHARS)
            if bad:
                raise FixtureError(f"unknown terrain characters {sorted(bad)}")
            rows.append(tuple(TERRAIN_CHARS[c] for c in line))
    if not rows:
        raise FixtureError("fixture has no terrain rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise FixtureError("terrain rows have unequal width")
    if 0 not in starts or 1 not in starts:
        raise FixtureError("fixture needs agent and opponent start positions")
    fixture = MapFixture(name, width, len(rows), tuple(rows), (starts[0], starts[1]))
    for x, y in fixture.starts:
        if not (0 <= x < width and 0 <= y < len(rows)):
            raise FixtureError(f"start position ({x},{y}) outside the map")
        if rows[y][x] == WATER:
            raise FixtureError(f"start position ({x},{y}) is water")
    return fixture


def in_bounds(state: GameState, x: int, y: int) -> bool:
    return 0 <= x < state.width and 0 <= y < state.height


def terrain_at(state: GameState, x: int, y: int) -> str:
    return state.terrain[y][x]


def is_land(state: GameState, x: int, y: int) -> bool:
    return in_bounds(state, x, y) and terrain_at(state, x, y) != WATER


def chebyshev(ax: int, ay: int, bx: int, by: int) -> int:
    return max(abs(ax - bx), abs(ay - by))


def neighbors(state: GameState, x: int, y: int):
    for d in DIR_ORDER:
        dx, dy = DIRECTIONS[d]
        nx, ny = x + dx, y + dy
        if in_bounds(state, nx, ny):
            yield nx, ny


@lru_cache(maxsize=16)
def land_components(terrain: tuple) -> dict:
    """Map (x, y) of each land tile to a connected-component id (8-connex)."""
    height, width = len(terrain), len(terrain[0])
    comp: dict[tuple[int, int], int] = {}
    next_comp = 0
    for y in range(height):
        for x in range(width):
            if terrain[y][x] == WATER or (x, y) in comp:
                continue
            stack = [(x, y)]
            comp[(x, y)] = next_comp
            while stack:
                cx, cy = stack.pop()
                for dx, dy in DIRECTIONS.values():
                    nx, ny = cx + dx, cy + dy
                    if (
                        0 <= nx < width and 0 <= ny < height
                        and terrain[ny][nx] != WATER
                        and (nx, ny) not in comp
                    ):
                        comp[(nx, ny)] = next_comp
                        stack.append((nx, ny))
            next_comp += 1
    return comp


# --- game setup --------------------------------------------------------------------


def _explore(state: GameState, player: int, x: int, y: int) -> None:
    explored = state.players[player].explored
    for dy in range(-VISION_RADIUS, VISION_RADIUS + 1):
        for dx in range(-VISION_RADIUS, VISION_RADIUS + 1):
            nx, ny = x + dx, y + dy
            if in_bounds(state, nx, ny):
                explored.add((nx, ny))


def _spawn_unit(state: GameState, player: int, kind: str, x: int, y: int,
                moves: int = 1) -> Unit:
    hp = BASE_HP[kind]
    if kind == "warrior":
        hp += state.players[player].tech_level
    unit = Unit(state.next_id, kind, x, y, hp, moves)
    state.next_id += 1
    state.players[player].units[unit.id] = unit
    _explore(state, player, x, y)
    return unit


def new_game(fixture: MapFixture, seed: int = 0) -> GameState:
    """Deterministic initial state: each player gets a settler and a warrior."""
    state = GameState(
        fixture=fixture.name,
        width=fixture.width,
        height=fixture.height,
        terrain=fixture.terrain,
        improved=set(),
        players=[PlayerState(), PlayerState()],
        seed=seed,
    )
    for player, (sx, sy) in enumerate(fixture.starts):
        _spawn_unit(state, player, "settler", sx, sy)
        for d in DIR_ORDER:
            dx, dy = DIRECTIONS[d]
            wx, wy = sx + dx, sy + dy
            if is_land(state, wx, wy):
                _spawn_unit(state, player, "warrior", wx, wy)
                break
        else:
            raise FixtureError(f"no land next to start ({sx},{sy}) for the warrior")
    return state


def clone_state(state: GameState) -> GameState:
    players = []
    for p in state.players:
        players.append(PlayerState(
            units={i: copy.copy(u) for i, u in p.units.items()},
            cities={
                i: City(c.id, c.x, c.y, c.population, c.food_store,
                        set(c.buildings), c.production, c.progress)
                for i, c in p.cities.items()
            },
            science=p.science, gold=p.gold, tech_level=p.tech_level,
            focus=p.focus, explored=set(p.explored),
        ))
    return GameState(
        fixture=state.fixture, width=state.width, height=state.height,
        terrain=state.terrain, improved=set(state.improved), players=players,
        turn=state.turn, phase=state.phase, next_id=state.next_id,
        winner=state.winner, seed=state.seed, version=state.version,
    )


def state_hash(state: GameState) -> str:
    """Stable digest of everything the rules can observe (for replays)."""
    doc = {
        "fixture": state.fixture,
        "turn": state.turn,
        "phase": state.phase,
        "next_id": state.next_id,
        "winner": state.winner,
        "improved": sorted(state.improved),
        "players": [
            {
                "units": [
                    [u.id, u.kind, u.x, u.y, u.hp, u.moves_left]
                    for u in sorted(p.units.values(), key=lambda u: u.id)
                ],
                "cities": [
                    [c.id, c.x, c.y, c.population, c.food_store,
                     sorted(c.buildings), c.production, c.progress]
                    for c in sorted(p.cities.values(), key=lambda c: c.id)
                ],
                "science": p.science, "gold": p.gold,
                "tech_level": p.tech_level, "focus": p.focus,
                "explored": sorted(p.explored),
            }
            for p in state.players
        ],
    }
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


# --- lookups -----------------------------------------------------------------------


def unit_at(state: GameState, x: int, y: int, player: int | None = None):
    for idx, p in enumerate(state.players):
        if player is not None and idx != player:
            continue
        for unit in sorted(p.units.values(), key=lambda u: u.id):
            if unit.x == x and unit.y == y:
                return idx, unit
    return None


def city_at(state: GameState, x: int, y: int, player: int | None = None):
    for idx, p in enumerate(state.players):
        if player is not None and idx != player:
            continue
        for city in p.cities.values():
            if city.x == x and city.y == y:
                return idx, city
    return None


def find_unit(state: GameState, player: int, unit_id: int) -> Unit | None:
    return state.players[player].units.get(unit_id)


def visible_enemy_pieces(state: GameState, player: int):
    """Enemy units and cities within vision of the player's own pieces."""
    mine = state.players[player]
    spots = [(u.x, u.y) for u in mine.units.values()]
    spots += [(c.x, c.y) for c in mine.cities.values()]
    enemy = state.players[1 - player]
    units = [
        u for u in sorted(enemy.units.values(), key=lambda u: u.id)
        if any(chebyshev(u.x, u.y, x, y) <= VISION_RADIUS for x, y in spots)
    ]
    cities = [
        c for c in sorted(enemy.cities.values(), key=lambda c: c.id)
        if any(chebyshev(c.x, c.y, x, y) <= VISION_RADIUS for x, y in spots)
    ]
    return units, cities


# --- yields ------------------------------------------------------------------------


def _tile_yield(state: GameState, x: int, y: int) -> tuple[int, int]:
    terrain = terrain_at(state, x, y)
    bonus = 1 if (x, y) in state.improved else 0
    if terrain == GRASS:
        return 1 + bonus, 0
    if terrain == HILLS:
        return 0, 1 + bonus
    return 0, 0


def city_food_income(state: GameState, player: int, city: City) -> int:
    food = 2
    for nx, ny in neighbors(state, city.x, city.y):
        food += _tile_yield(state, nx, ny)[0]
    if "granary" in city.buildings:
        food += 2
    return food


def city_prod_income(state: GameState, player: int, city: City) -> int:
    prod = 1
    for nx, ny in neighbors(state, city.x, city.y):
        prod += _tile_yield(state, nx, ny)[1]
    if state.players[player].focus == "production":
        prod *= 2
    return prod


def city_science_income(state: GameState, player: int, city: City) -> int:
    sci = city.population
    if state.players[player].focus == "science":
        sci *= 2
    if "library" in city.buildings:
        sci += city.population
    return sci


def player_income(state: GameState, player: int) -> dict:
    totals = {"food": 0, "production": 0, "science": 0, "gold": 0}
    for city in state.players[player].cities.values():
        totals["food"] += city_food_income(state, player, city)
        totals["production"] += city_prod_income(state, player, city)
        totals["science"] += city_science_income(state, player, city)
        totals["gold"] += city.population
    return totals


def score(state: GameState, player: int) -> int:
    p = state.players[player]
    pop = sum(c.population for c in p.cities.values())
    return (5 * len(p.cities) + 3 * pop + 10 * p.tech_level
            + len(p.units) + p.gold // 10)


def tech_cost(level: int) -> int:
    return TECH_COST_PER_LEVEL * level


# --- command application --------------------------------------------------------------


def apply(state: GameState, commands: list) -> GameState:
    """Apply the current player's commands in order; returns the new state.

    Illegal commands are rejected (logged, state unchanged by them);
    ``end_turn`` closes the phase, and after player 1's phase the turn
    counter increments.
    """
    st = clone_state(state)
    for cmd in commands:
        try:
            _apply_one(st, cmd)
        except CommandError as exc:
            logger.info("turn %d p%d: rejected %s (%s)", st.turn, st.phase,
                        cmd.to_text(), exc)
        st.version += 1
    return st


def _apply_one(st: GameState, cmd: Command) -> None:
    player = st.phase
    if st.winner is not None:
        raise CommandError("game is over")
    if cmd.verb == "end_turn":
        _end_phase(st)
        return
    if cmd.verb == "research_focus":
        if cmd.focus not in FOCUS_KINDS:
            raise CommandError(f"unknown focus {cmd.focus!r}")
        st.players[player].focus = cmd.focus
        return
    if cmd.verb == "build" and cmd.city is not None:
        city = st.players[player].cities.get(cmd.city)
        if city is None:
            raise CommandError(f"no city {cmd.city}")
        if cmd.item not in BUILD_COSTS:
            raise CommandError(f"unknown item {cmd.item!r}")
        if cmd.item in BUILDINGS and cmd.item in city.buildings:
            raise CommandError(f"{cmd.item} already built")
        if cmd.item == "settler" and city.population < 2:
            raise CommandError("settler needs population 2")
        city.production = cmd.item
        return
    unit = find_unit(st, player, cmd.unit if cmd.unit is not None else -1)
    if unit is None:
        raise CommandError(f"no unit {cmd.unit}")
    if cmd.verb == "move":
        _move_unit(st, player, unit, cmd.direction)
    elif cmd.verb == "found_city":
        _found_city(st, player, unit)
    elif cmd.verb == "attack":
        _attack(st, player, unit, cmd.direction)
    elif cmd.verb == "build" and cmd.item == "farm":
        _improve(st, player, unit)
    else:
        raise CommandError(f"bad command {cmd!r}")


def _move_unit(st: GameState, player: int, unit: Unit, direction: str) -> None:
    if unit.moves_left <= 0:
        raise CommandError("no moves left")
    dx, dy = DIRECTIONS[direction]
    nx, ny = unit.x + dx, unit.y + dy
    if not is_land(st, nx, ny):
        raise CommandError("destination is not land")
    own_city = city_at(st, nx, ny, player)
    if unit_at(st, nx, ny) is not None and own_city is None:
        raise CommandError("destination occupied")
    if city_at(st, nx, ny, 1 - player) is not None:
        raise CommandError("enemy city in the way")
    unit.x, unit.y = nx, ny
    unit.moves_left -= 1
    _explore(st, player, nx, ny)


def _found_city(st: GameState, player: int, unit: Unit) -> None:
    if unit.kind != "settler":
        raise CommandError("only settlers found cities")
    if not is_land(st, unit.x, unit.y):
        raise CommandError("cannot found on water")
    for p in st.players:
        for city in p.cities.values():
            if chebyshev(city.x, city.y, unit.x, unit.y) < CITY_MIN_SPACING:
                raise CommandError("too close to another city")
    city = City(st.next_id, unit.x, unit.y)
    st.next_id += 1
    st.players[player].cities[city.id] = city
    del st.players[player].units[unit.id]
    _explore(st, player, city.x, city.y)


def _improve(st: GameState, player: int, unit: Unit) -> None:
    if unit.kind != "worker":
        raise CommandError("only workers build farms")
    if unit.moves_left <= 0:
        raise CommandError("no moves left")
    spot = (unit.x, unit.y)
    if spot in st.improved:
        raise CommandError("already improved")
    if not is_land(st, unit.x, unit.y):
        raise CommandError("cannot improve water")
    st.improved.add(spot)
    unit.moves_left = 0


def _defender_at(st: GameState, enemy: int, x: int, y: int):
    """Strongest enemy unit on a tile, or the city defending itself."""
    units = [u for u in st.players[enemy].units.values() if (u.x, u.y) == (x, y)]
    if units:
        return max(units, key=lambda u: (u.hp, u.id))
    hit = city_at(st, x, y, enemy)
    return hit[1] if hit else None


def defender_hp(st: GameState, enemy: int, x: int, y: int) -> int | None:
    d = _defender_at(st, enemy, x, y)
    if d is None:
        return None
    return d.hp if isinstance(d, Unit) else d.population


def _attack(st: GameState, player: int, unit: Unit, direction: str) -> None:
    if unit.kind != "warrior":
        raise CommandError("only warriors attack")
    if unit.moves_left <= 0:
        raise CommandError("no moves left")
    dx, dy = DIRECTIONS[direction]
    tx, ty = unit.x + dx, unit.y + dy
    enemy = 1 - player
    defender = _defender_at(st, enemy, tx, ty)
    if defender is None:
        raise CommandError("nothing to attack there")
    unit.moves_left = 0
    if isinstance(defender, Unit):
        if unit.hp > defender.hp:
            del st.players[enemy].units[defender.id]
        else:
            del st.players[player].units[unit.id]
        return
    # undefended city: chip population, raze at zero
    if unit.hp > defender.population:
        defender.population -= 1
        if defender.population <= 0:
            del st.players[enemy].cities[defender.id]
    else:
        del st.players[player].units[unit.id]


def _end_phase(st: GameState) -> None:
    player = st.phase
    p = st.players[player]
    for city in sorted(p.cities.values(), key=lambda c: c.id):
        food = city_food_income(st, player, city)
        prod = city_prod_income(st, player, city)
        city.food_store += food - 2 * city.population
        if city.food_store >= GROWTH_BASE + 2 * city.population:
            city.population += 1
            city.food_store = 0
        elif city.food_store < 0:
            city.population = max(1, city.population - 1)
            city.food_store = 0
        if city.production:
            city.progress += prod
            cost = BUILD_COSTS[city.production]
            if city.progress >= cost:
                if city.production == "settler" and city.population < 2:
                    city.progress = cost  # hold until the city can spare a settler
                else:
                    _complete_production(st, player, city)
        p.science += city_science_income(st, player, city)
        p.gold += city.population
    while p.tech_level < T_MAX and p.science >= tech_cost(p.tech_level + 1):
        p.science -= tech_cost(p.tech_level + 1)
        p.tech_level += 1
    if p.tech_level >= T_MAX and st.winner is None:
        st.winner = player
    st.phase = 1 - player
    if player == 1:
        st.turn += 1
    for unit in st.players[st.phase].units.values():
        unit.moves_left = 1


def _complete_production(st: GameState, player: int, city: City) -> None:
    item = city.production
    city.progress -= BUILD_COSTS[item]
    city.production = ""
    if item in BUILDINGS:
        city.buildings.add(item)
        return
    if item == "settler":
        city.population -= 1
    _spawn_unit(st, player, item, city.x, city.y, moves=0)


# --- outcome -----------------------------------------------------------------------


@dataclass(frozen=True)
class GameOutcome:
    kind: str  # won | lost_race | destroyed
    final_turn: int


def outcome(state: GameState, player: int = 0) -> GameOutcome | None:
    """Terminal outcome from one player's perspective, or None."""
    if state.winner is not None:
        kind = "won" if state.winner == player else "lost_race"
        return GameOutcome(kind, state.turn)
    if not state.players[player].alive:
        return GameOutcome("destroyed", state.turn)
    return None


# --- shared spatial helpers (scripted play and connector hints) ----------------------


def settle_score(state: GameState, x: int, y: int) -> int:
    """Desirability of founding at (x, y): 0 if illegal, else neighbourhood yield.

    Spacing is checked against every existing city (both players) so a
    positive score always means founding would be accepted.
    """
    if not is_land(state, x, y):
        return 0
    for p in state.players:
        for city in p.cities.values():
            if chebyshev(city.x, city.y, x, y) < CITY_MIN_SPACING:
                return 0
    total = 0
    for tx, ty in [(x, y), *neighbors(state, x, y)]:
        terrain = terrain_at(state, tx, ty)
        if terrain == GRASS:
            total += 2
        elif terrain == HILLS:
            total += 1
        if (tx, ty) in state.improved and terrain != WATER:
            total += 1
    return total


def best_settle_spot(state: GameState, player: int, unit: Unit,
                     explored_only: bool = True):
    """Best founding tile on the unit's landmass: (score, x, y) or None.

    Distance discounts the raw neighbourhood score one point per tile,
    so a good spot nearby beats a marginally better one far away.
    """
    comps = land_components(state.terrain)
    home = comps.get((unit.x, unit.y))
    if home is None:
        return None
    explored = state.players[player].explored
    best = None
    for (x, y), comp in comps.items():
        if comp != home:
            continue
        if explored_only and (x, y) not in explored:
            continue
        s = settle_score(state, x, y)
        if s <= 0:
            continue
        effective = s - chebyshev(unit.x, unit.y, x, y)
        key = (-effective, y, x)
        if best is None or key < best[0]:
            best = (key, x, y, s)
    if best is None:
        return None
    return (best[3], best[1], best[2])


def step_toward(state: GameState, player: int, unit: Unit, tx: int, ty: int) -> str | None:
    """Greedy move direction reducing Chebyshev distance, or None if blocked."""
    current = chebyshev(unit.x, unit.y, tx, ty)
    if current == 0:
        return None
    for d in DIR_ORDER:
        dx, dy = DIRECTIONS[d]
        nx, ny = unit.x + dx, unit.y + dy
        if chebyshev(nx, ny, tx, ty) >= current:
            continue
        if not is_land(state, nx, ny):
            continue
        if city_at(state, nx, ny, 1 - player) is not None:
            continue
        if unit_at(state, nx, ny) is not None and city_at(state, nx, ny, player) is None:
            continue
        return d
    return None


def nearest_unexplored(state: GameState, player: int, unit: Unit):
    """Closest unexplored land tile on this landmass, or None."""
    comps = land_components(state.terrain)
    home = comps.get((unit.x, unit.y))
    explored = state.players[player].explored
    best = None
    for (x, y), comp in comps.items():
        if comp != home or (x, y) in explored:
            continue
        key = (chebyshev(unit.x, unit.y, x, y), y, x)
        if best is None or key < best:
            best = key
    if best is None:
        return None
    return best[1], best[2], best[0]  # x, y, distance


def improvable_spots(state: GameState, player: int):
    """Unimproved land tiles within distance 1 of one of the player's cities."""
    spots = set()
    for city in state.players[player].cities.values():
        for x, y in [(city.x, city.y), *neighbors(state, city.x, city.y)]:
            if is_land(state, x, y) and (x, y) not in state.improved:
                spots.add((x, y))
    return spots


# --- scripted opponent -----------------------------------------------------------------


class ScriptedPolicy:
    """Deterministic built-in player: expand, then develop, then defend.

    It reads the full game state (like a game's embedded AI would), in
    contrast to the rule-driven agent which only sees its own fog of
    war.  Priorities per phase: warriors attack winnable adjacent
    targets, garrison needy cities, hunt when clearly superior, else
    explore; settlers found on decent spots or walk to the best one;
    workers improve; cities keep a fixed build order; research focus
    switches to science once the empire stands.
    """

    SETTLE_THRESHOLD = 8
    TARGET_CITIES = 5

    def plan(self, state: GameState) -> list:
        player = state.phase
        commands: list[Command] = []
        sim = state
        for maker in (self._warrior_commands, self._settler_commands,
                      self._worker_commands, self._city_commands,
                      self._focus_commands):
            new = maker(sim, player)
            if new:
                commands.extend(new)
                sim = apply(sim, new)
        commands.append(Command("end_turn"))
        return commands

    def _warrior_commands(self, state: GameState, player: int) -> list:
        commands = []
        enemy = 1 - player
        me = state.players[player]
        needy = sorted(
            (c for c in me.cities.values()
             if unit_at(state, c.x, c.y, player) is None),
            key=lambda c: c.id,
        )
        claimed: set[int] = set()
        hunt = (
            sum(1 for u in me.units.values() if u.kind == "warrior") >= 2
            and sum(1 for u in me.units.values() if u.kind == "warrior")
            > sum(1 for u in state.players[enemy].units.values()
                  if u.kind == "warrior")
        )
        for unit in sorted(me.units.values(), key=lambda u: u.id):
            if unit.kind != "warrior" or unit.moves_left <= 0:
                continue
            # attack an adjacent target we beat outright
            best = None
            for d in DIR_ORDER:
                dx, dy = DIRECTIONS[d]
                hp = defender_hp(state, enemy, unit.x + dx, unit.y + dy)
                if hp is not None and unit.hp > hp:
                    if best is None or hp < best[1]:
                        best = (d, hp)
            if best:
                commands.append(Command("attack", unit=unit.id, direction=best[0]))
                continue
            # garrison the nearest uncovered city
            target_city = None
            for c in needy:
                if c.id in claimed:
                    continue
                if target_city is None or (
                    chebyshev(unit.x, unit.y, c.x, c.y)
                    < chebyshev(unit.x, unit.y, target_city.x, target_city.y)
                ):
                    target_city = c
            if target_city is not None:
                claimed.add(target_city.id)
                if (unit.x, unit.y) != (target_city.x, target_city.y):
                    d = step_toward(state, player, unit, target_city.x, target_city.y)
                    if d:
                        commands.append(Command("move", unit=unit.id, direction=d))
                continue
            if hunt:
                target = self._nearest_enemy(state, player, unit)
                if target is not None:
                    d = step_toward(state, player, unit, target[0], target[1])
                    if d:
                        commands.append(Command("move", unit=unit.id, direction=d))
                    continue
            spot = nearest_unexplored(state, player, unit)
            if spot is not None:
                d = step_toward(state, player, unit, spot[0], spot[1])
                if d:
                    commands.append(Command("move", unit=unit.id, direction=d))
        return commands

    def _nearest_enemy(self, state: GameState, player: int, unit: Unit):
        enemy = state.players[1 - player]
        best = None
        for u in sorted(enemy.units.values(), key=lambda u: u.id):
            key = (chebyshev(unit.x, unit.y, u.x, u.y), 0, u.id)
            if best is None or key < best[0]:
                best = (key, u.x, u.y)
        for c in sorted(enemy.cities.values(), key=lambda c: c.id):
            key = (chebyshev(unit.x, unit.y, c.x, c.y), 1, c.id)
            if best is None or key < best[0]:
                best = (key, c.x, c.y)
        if best is None:
            return None
        return best[1], best[2]

    def _settler_commands(self, state: GameState, player: int) -> list:
        commands = []
        sim = state
        for unit in sorted(state.players[player].units.values(), key=lambda u: u.id):
            if unit.kind != "settler":
                continue
            here = settle_score(sim, unit.x, unit.y)
            if here >= self.SETTLE_THRESHOLD:
                cmd = Command("found_city", unit=unit.id)
                commands.append(cmd)
                sim = apply(sim, [cmd])
                continue
            if unit.moves_left <= 0:
                continue
            spot = best_settle_spot(sim, player, unit, explored_only=False)
            if spot is None:
                continue
            if (spot[1], spot[2]) == (unit.x, unit.y):
                cmd = Command("found_city", unit=unit.id)
                commands.append(cmd)
                sim = apply(sim, [cmd])
                continue
            d = step_toward(sim, player, unit, spot[1], spot[2])
            if d:
                commands.append(Command("move", unit=unit.id, direction=d))
        return commands

    def _worker_commands(self, state: GameState, player: int) -> list:
        commands = []
        spots = improvable_spots(state, player)
        taken = set()
        for unit in sorted(state.players[player].units.values(), key=lambda u: u.id):
            if unit.kind != "worker" or unit.moves_left <= 0:
                continue
            if (unit.x, unit.y) in spots and (unit.x, unit.y) not in taken:
                commands.append(Command("build", unit=unit.id, item="farm"))
                taken.add((unit.x, unit.y))
                continue
            free = sorted(s for s in spots if s not in taken)
            if not free:
                continue
            tx, ty = min(free, key=lambda s: (chebyshev(unit.x, unit.y, *s), s[1], s[0]))
            d = step_toward(state, player, unit, tx, ty)
            if d:
                commands.append(Command("move", unit=unit.id, direction=d))
                taken.add((tx, ty))
        return commands

    def _city_commands(self, state: GameState, player: int) -> list:
        commands = []
        me = state.players[player]
        enemy = state.players[1 - player]
        n_settlers = sum(1 for u in me.units.values() if u.kind == "settler")
        n_workers = sum(1 for u in me.units.values() if u.kind == "worker")
        for city in sorted(me.cities.values(), key=lambda c: c.id):
            if city.production:
                continue
            garrison = any(
                u.kind == "warrior" and (u.x, u.y) == (city.x, city.y)
                for u in me.units.values()
            )
            threatened = any(
                chebyshev(u.x, u.y, city.x, city.y) <= 5
                for u in enemy.units.values() if u.kind == "warrior"
            )
            if not garrison and threatened:
                item = "warrior"
            elif (n_settlers == 0 and len(me.cities) < self.TARGET_CITIES
                  and city.population >= 2):
                item = "settler"
                n_settlers += 1
            elif "library" not in city.buildings and city.population >= 2:
                item = "library"
            elif not garrison:
                item = "warrior"
            elif "granary" not in city.buildings:
                item = "granary"
            elif n_workers < len(me.cities):
                item = "worker"
                n_workers += 1
            else:
                item = "warrior"
            commands.append(Command("build", city=city.id, item=item))
        return commands

    def _focus_commands(self, state: GameState, player: int) -> list:
        me = state.players[player]
        if me.cities and me.focus != "science":
            return [Command("research_focus", focus="science")]
        return []
