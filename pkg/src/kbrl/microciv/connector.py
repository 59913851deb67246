"""Connector: mirror one player's view of the game into the semantic graph.

After a sync the graph contains exactly what that player can see: the
game node, both player nodes (the enemy one carries public information
only), every explored tile, the player's own units and cities in full,
and enemy pieces currently inside vision range.  Unexplored tiles are
absent.  Node ids are stable (``unit-7`` keeps its id as it moves), so
repeated syncs update in place and remove only what vanished.

Own units additionally carry navigation hints (``civ/dir_to_spot``,
``civ/enemy_adjacent_hp`` and friends) computed from the same visible
information, so rules can steer units without doing arithmetic the rule
language does not have.  Steering uses breadth-first distance fields
over land, shared per sync and memoized on the graph between syncs
(keyed by what they depend on), which keeps the per-execution resync
cheap.  The one deliberate exception to visibility: founding-spot
scores respect the spacing rule against *all* cities, known or not, so
a rule firing on a positive score can never be rejected by the game
and loop.

The connector owns every node it writes: a ``graph.set`` by a rule on
one of these nodes lasts only until the next sync overwrites it.
"""

from __future__ import annotations

from collections import deque

from ..graph import SemanticGraph, SemanticNode
from . import game as g

_UNIT_TYPE = {"settler": "civ/Settlers", "worker": "civ/Worker", "warrior": "civ/Warrior"}
_UNIT_VERB = {"settler": "civ/settlersOn", "worker": "civ/workerOn", "warrior": "civ/warriorOn"}

_DIR_STEPS = [(d, g.DIRECTIONS[d]) for d in g.DIR_ORDER]


def _tile_id(x: int, y: int) -> str:
    return f"tile-{x}-{y}"


def _bfs_field(state: g.GameState, sources) -> dict:
    """Distance over land (8-connex) from the source tiles."""
    dist = {}
    queue = deque()
    for pos in sources:
        if pos not in dist:
            dist[pos] = 0
            queue.append(pos)
    while queue:
        x, y = queue.popleft()
        d = dist[(x, y)] + 1
        for _, (dx, dy) in _DIR_STEPS:
            nb = (x + dx, y + dy)
            if nb not in dist and g.is_land(state, nb[0], nb[1]):
                dist[nb] = d
                queue.append(nb)
    return dist


class _View:
    """Per-sync scratch: shared lookups and memoized distance fields."""

    def __init__(self, state: g.GameState, player: int, memo: dict):
        self.state = state
        self.player = player
        self.memo = memo
        self.me = state.players[player]
        self.enemy_units, self.enemy_cities = g.visible_enemy_pieces(state, player)
        self.occupied = {
            (u.x, u.y) for p in state.players for u in p.units.values()
        }
        self.own_city_tiles = {(c.x, c.y) for c in self.me.cities.values()}
        self.enemy_city_tiles = {
            (c.x, c.y) for c in state.players[1 - player].cities.values()
        }

    def field(self, key, sources) -> dict:
        cached = self.memo.get(key)
        if cached is None:
            cached = _bfs_field(self.state, sources)
            self.memo[key] = cached
        return cached

    def step_by_field(self, unit: g.Unit, field: dict) -> str:
        """Direction strictly descending the field, respecting occupancy."""
        here = field.get((unit.x, unit.y))
        if here is None or here == 0:
            return "none"
        best = None
        for d, (dx, dy) in _DIR_STEPS:
            nb = (unit.x + dx, unit.y + dy)
            val = field.get(nb)
            if val is None or val >= here:
                continue
            if nb in self.enemy_city_tiles:
                continue
            if nb in self.occupied and nb not in self.own_city_tiles:
                continue
            if best is None or val < best[0]:
                best = (val, d)
        return best[1] if best else "none"

    # --- concrete fields -----------------------------------------------------

    def unexplored_field(self) -> dict:
        explored = self.me.explored
        key = ("unexplored", self.player, len(explored))
        if key not in self.memo:
            comps = g.land_components(self.state.terrain)
            sources = [pos for pos in comps if pos not in explored]
            self.memo[key] = _bfs_field(self.state, sources)
        return self.memo[key]

    def enemy_field(self) -> dict:
        targets = tuple(sorted(
            [(u.x, u.y) for u in self.enemy_units]
            + [(c.x, c.y) for c in self.enemy_cities]
        ))
        return self.field(("enemy", self.player, targets), targets)

    def guard_field(self) -> dict:
        needy = tuple(sorted(
            (c.x, c.y) for c in self.me.cities.values()
            if not any(u.kind == "warrior" and (u.x, u.y) == (c.x, c.y)
                       for u in self.me.units.values())
        ))
        return self.field(("guard", self.player, needy), needy)

    def improvable(self) -> set:
        key = ("improvable", self.player,
               tuple(sorted(self.own_city_tiles)), len(self.state.improved))
        if key not in self.memo:
            self.memo[key] = g.improvable_spots(self.state, self.player)
        return self.memo[key]

    def work_field(self) -> dict:
        spots = self.improvable()
        return self.field(
            ("work", self.player, tuple(sorted(spots)), len(self.state.improved)),
            sorted(spots),
        )

    def score_grid(self) -> dict:
        all_cities = tuple(sorted(
            (c.x, c.y) for p in self.state.players for c in p.cities.values()
        ))
        key = ("scores", all_cities, len(self.state.improved))
        if key not in self.memo:
            comps = g.land_components(self.state.terrain)
            self.memo[key] = {
                pos: g.settle_score(self.state, pos[0], pos[1]) for pos in comps
            }
        return self.memo[key]

    def spot_field(self, target) -> dict:
        return self.field(("spotfield", target), [target])


def _settler_hints(view: _View, unit: g.Unit) -> dict:
    scores = view.score_grid()
    here_score = scores.get((unit.x, unit.y), 0)
    comps = g.land_components(view.state.terrain)
    home = comps.get((unit.x, unit.y))
    explored = view.me.explored
    best = None
    for pos, comp in comps.items():
        if comp != home or pos not in explored:
            continue
        s = scores.get(pos, 0)
        if s <= 0:
            continue
        effective = s - g.chebyshev(unit.x, unit.y, pos[0], pos[1])
        key = (-effective, pos[1], pos[0])
        if best is None or key < best[0]:
            best = (key, pos)
    if best is None:
        direction = "none"
    elif best[1] == (unit.x, unit.y):
        direction = "here"
    else:
        direction = view.step_by_field(unit, view.spot_field(best[1]))
    return {"civ/spot_score": here_score, "civ/dir_to_spot": direction}


def _worker_hints(view: _View, unit: g.Unit) -> dict:
    spots = view.improvable()
    can_here = (unit.x, unit.y) in spots
    if can_here:
        direction = "here"
    elif spots:
        direction = view.step_by_field(unit, view.work_field())
    else:
        direction = "none"
    return {"civ/can_improve": can_here, "civ/dir_to_work": direction}


def _warrior_hints(view: _View, unit: g.Unit) -> dict:
    adj_dir, adj_hp, adj_kind = "none", 0, "none"
    best = None
    by_pos_units = {(u.x, u.y): u for u in view.enemy_units}
    by_pos_cities = {(c.x, c.y): c for c in view.enemy_cities}
    for d, (dx, dy) in _DIR_STEPS:
        pos = (unit.x + dx, unit.y + dy)
        target = by_pos_units.get(pos)
        if target is not None:
            hp, kind = target.hp, "unit"
        elif pos in by_pos_cities:
            hp, kind = by_pos_cities[pos].population, "city"
        else:
            continue
        if best is None or hp < best[0]:
            best = (hp, d, kind)
    if best is not None:
        adj_hp, adj_dir, adj_kind = best

    hunt_dir = "none"
    if view.enemy_units or view.enemy_cities:
        hunt_dir = view.step_by_field(unit, view.enemy_field())

    explore_dir = view.step_by_field(unit, view.unexplored_field())

    # a warrior already on one of our city tiles is garrisoning it: stay put
    if (unit.x, unit.y) in view.own_city_tiles:
        guard_dir = "here"
    else:
        guard_field = view.guard_field()
        guard_dir = view.step_by_field(unit, guard_field) if guard_field else "none"

    return {
        "civ/enemy_adjacent_dir": adj_dir,
        "civ/enemy_adjacent_hp": adj_hp,
        "civ/enemy_adjacent_kind": adj_kind,
        "civ/dir_to_enemy": hunt_dir,
        "civ/dir_unexplored": explore_dir,
        "civ/dir_to_guard": guard_dir,
    }


def _desired_graph(state: g.GameState, player: int, memo: dict):
    view = _View(state, player, memo)
    me = view.me
    nodes: dict[str, tuple[str, dict]] = {}
    edges: set[tuple[str, str, str]] = set()

    nodes["game"] = ("civ/Game", {"civ/turn": state.turn, "civ/tech_goal": g.T_MAX})

    nodes["player-agent"] = ("civ/Player", {
        "civ/role": "agent",
        "civ/science": me.science,
        "civ/gold": me.gold,
        "civ/tech_level": me.tech_level,
        "civ/focus": me.focus,
        "civ/score": g.score(state, player),
        "civ/cities": len(me.cities),
        "civ/settlers": sum(1 for u in me.units.values() if u.kind == "settler"),
        "civ/warriors": sum(1 for u in me.units.values() if u.kind == "warrior"),
        "civ/workers": sum(1 for u in me.units.values() if u.kind == "worker"),
        "civ/explored": len(me.explored),
        "civ/enemies_visible": len(view.enemy_units) + len(view.enemy_cities),
        "civ/alive": me.alive,
    })

    them = state.players[1 - player]
    nodes["player-enemy"] = ("civ/Player", {
        "civ/role": "enemy",
        "civ/tech_level": them.tech_level,
        "civ/alive": them.alive,
    })

    tile_key = ("tiles", player, len(me.explored), len(state.improved))
    tiles = memo.get(tile_key)
    if tiles is None:
        tiles = {
            _tile_id(x, y): ("civ/Tile", {
                "civ/x": x, "civ/y": y,
                "civ/terrain": g.terrain_at(state, x, y),
                "civ/improved": (x, y) in state.improved,
            })
            for x, y in me.explored
        }
        memo[tile_key] = tiles
    nodes.update(tiles)

    for unit in me.units.values():
        attrs = {
            "civ/id": unit.id, "civ/x": unit.x, "civ/y": unit.y,
            "civ/hp": unit.hp, "civ/moves_left": unit.moves_left,
            "civ/owner": "agent",
        }
        if unit.kind == "settler":
            attrs.update(_settler_hints(view, unit))
        elif unit.kind == "worker":
            attrs.update(_worker_hints(view, unit))
        else:
            attrs.update(_warrior_hints(view, unit))
        node_id = f"unit-{unit.id}"
        nodes[node_id] = (_UNIT_TYPE[unit.kind], attrs)
        edges.add((_UNIT_VERB[unit.kind], node_id, _tile_id(unit.x, unit.y)))

    for unit in view.enemy_units:
        node_id = f"unit-{unit.id}"
        nodes[node_id] = (_UNIT_TYPE[unit.kind], {
            "civ/id": unit.id, "civ/x": unit.x, "civ/y": unit.y,
            "civ/hp": unit.hp, "civ/owner": "enemy",
        })
        if (unit.x, unit.y) in me.explored:
            edges.add((_UNIT_VERB[unit.kind], node_id, _tile_id(unit.x, unit.y)))

    for city in me.cities.values():
        garrisoned = any(
            u.kind == "warrior" and (u.x, u.y) == (city.x, city.y)
            for u in me.units.values()
        )
        node_id = f"city-{city.id}"
        nodes[node_id] = ("civ/City", {
            "civ/id": city.id, "civ/x": city.x, "civ/y": city.y,
            "civ/population": city.population,
            "civ/food_store": city.food_store,
            "civ/producing": city.production,
            "civ/progress": city.progress,
            "civ/has_granary": "granary" in city.buildings,
            "civ/has_library": "library" in city.buildings,
            "civ/garrisoned": garrisoned,
            "civ/owner": "agent",
        })
        edges.add(("civ/builtOn", node_id, _tile_id(city.x, city.y)))
        edges.add(("civ/ownsCity", "player-agent", node_id))

    for city in view.enemy_cities:
        node_id = f"city-{city.id}"
        nodes[node_id] = ("civ/City", {
            "civ/id": city.id, "civ/x": city.x, "civ/y": city.y,
            "civ/population": city.population,
            "civ/owner": "enemy",
        })
        if (city.x, city.y) in me.explored:
            edges.add(("civ/builtOn", node_id, _tile_id(city.x, city.y)))

    return nodes, edges


def connector_sync(state: g.GameState, graph: SemanticGraph, player: int = 0) -> None:
    """Make the graph mirror the player-visible game state exactly."""
    memo = graph.__dict__.setdefault("_connector_memo", {})
    if len(memo) > 4096:  # stale fields from long games
        memo.clear()
    nodes, edges = _desired_graph(state, player, memo)

    for existing in list(graph.all_nodes()):
        if existing.id not in nodes:
            graph.remove_node(existing.id)

    for node_id, (entity_type, attrs) in nodes.items():
        current = graph.get_node(node_id)
        if current is not None and current.entity_type != entity_type:
            graph.remove_node(node_id)
            current = None
        if current is None or current.attributes != attrs:
            graph.upsert_node(SemanticNode(node_id, entity_type, dict(attrs)))

    current_edges = {(e.verb, e.from_id, e.to_id) for e in graph.edges()}
    for verb, a, b in current_edges - edges:
        graph.remove_edge(verb, a, b)
    for verb, a, b in sorted(edges - current_edges):
        graph.add_edge(verb, a, b)
