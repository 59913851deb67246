"""Round-robin tournaments between rule-driven agents.

Every unordered pair of agents plays ``games_per_pair`` games per
fixture, alternating the two start positions game by game, with a
deterministic seed per game index.  A game's winner is the seat that
wins the tech race, or the survivor if the other side is destroyed;
truncated games are draws.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .inference import ConflictResolver, EpisodeLimits
from .ki import KnowledgeItem
from .microciv import game as g
from .microciv.fixtures import load_fixture
from .microciv.match import play_match
from .ontology import Ontology
from .rl.training import episode_seed


@dataclass
class AgentSpec:
    name: str
    kb: list[KnowledgeItem]
    resolver_factory: Callable[[], ConflictResolver]


@dataclass
class PairResult:
    fixture: str
    agent_a: str
    agent_b: str
    games: int = 0
    wins_a: int = 0
    wins_b: int = 0
    draws: int = 0


@dataclass
class AgentStats:
    name: str
    games: int = 0
    wins: int = 0
    winning_turns: list = field(default_factory=list)
    final_scores: list = field(default_factory=list)
    resources: int = 0

    @property
    def mean_winning_turn(self) -> float | None:
        if not self.winning_turns:
            return None
        return sum(self.winning_turns) / len(self.winning_turns)

    @property
    def mean_final_score(self) -> float:
        if not self.final_scores:
            return 0.0
        return sum(self.final_scores) / len(self.final_scores)


@dataclass
class TournamentResult:
    pairs: list
    agents: dict

    def pair_csv(self) -> str:
        lines = ["fixture,agent_a,agent_b,games,wins_a,wins_b,draws"]
        for p in self.pairs:
            lines.append(
                f"{p.fixture},{p.agent_a},{p.agent_b},{p.games},"
                f"{p.wins_a},{p.wins_b},{p.draws}"
            )
        return "\n".join(lines) + "\n"

    def agent_csv(self) -> str:
        lines = ["agent,games,wins,mean_winning_turn,mean_final_score,resources_generated"]
        for name in sorted(self.agents):
            s = self.agents[name]
            mwt = "" if s.mean_winning_turn is None else f"{s.mean_winning_turn:.2f}"
            lines.append(
                f"{s.name},{s.games},{s.wins},{mwt},"
                f"{s.mean_final_score:.2f},{s.resources}"
            )
        return "\n".join(lines) + "\n"


def resources_generated(state: g.GameState, player: int) -> int:
    """Everything the player ever banked: gold, science, and spent research."""
    p = state.players[player]
    spent = sum(g.tech_cost(level) for level in range(1, p.tech_level + 1))
    return p.gold + p.science + spent


def run_tournament(
    agents: list[AgentSpec],
    ontology: Ontology,
    fixtures: list[str],
    games_per_pair: int,
    seed: int = 0,
    max_turns: int = 400,
    pairs: list[tuple[str, str]] | None = None,
) -> TournamentResult:
    """Play the round robin; ``pairs`` restricts to the named matchups."""
    if len(agents) < 2:
        raise ValueError("a tournament needs at least 2 agents")
    if games_per_pair < 1:
        raise ValueError("games_per_pair must be >= 1")
    by_name = {a.name: a for a in agents}
    if len(by_name) != len(agents):
        raise ValueError("agent names must be unique")
    if pairs is None:
        names = [a.name for a in agents]
        pairs = [
            (names[i], names[j])
            for i in range(len(names)) for j in range(i + 1, len(names))
        ]

    limits = EpisodeLimits(max_turns=max_turns)
    pair_results: list[PairResult] = []
    stats = {a.name: AgentStats(a.name) for a in agents}
    game_index = 0
    for fixture_name in fixtures:
        fixture = load_fixture(fixture_name)
        for name_a, name_b in pairs:
            spec_a, spec_b = by_name[name_a], by_name[name_b]
            result = PairResult(fixture_name, name_a, name_b)
            for game in range(games_per_pair):
                game_seed = episode_seed(seed, game_index)
                game_index += 1
                swap = game % 2 == 1
                first, second = (spec_b, spec_a) if swap else (spec_a, spec_b)
                match = play_match(
                    first.kb, second.kb, ontology, fixture, game_seed,
                    first.resolver_factory(), second.resolver_factory(), limits,
                )
                result.games += 1
                seat_names = (first.name, second.name)
                if match.winner is None:
                    result.draws += 1
                elif seat_names[match.winner] == name_a:
                    result.wins_a += 1
                else:
                    result.wins_b += 1
                records = (match.record_a, match.record_b)
                for seat, name in enumerate(seat_names):
                    s = stats[name]
                    s.games += 1
                    if match.winner == seat:
                        s.wins += 1
                        if records[seat].outcome == "won":
                            s.winning_turns.append(records[seat].final_turn)
                    s.final_scores.append(g.score(match.final_state, seat))
                    s.resources += resources_generated(match.final_state, seat)
            pair_results.append(result)
    return TournamentResult(pair_results, stats)
