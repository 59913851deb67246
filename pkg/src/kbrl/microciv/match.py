"""Wiring between the inference engine and MicroCiv: seats, scripted
episodes, and engine-vs-engine matches.

A :class:`Board` holds the single authoritative game state; a
:class:`MicroCivSeat` presents one player's side of it to an inference
engine (fog-of-war sync, command submission, turn advancement and the
outcome from that player's perspective).  A seat built with a scripted
opponent plays the opposing phase itself, which is the training setup;
:func:`play_match` instead alternates two engines over a shared board,
which is the tournament setup.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

from ..inference import (
    ConflictResolver, EpisodeLimits, EpisodeRecord, InferenceEngine, Outcome,
    run_episode,
)
from ..ki import KnowledgeItem
from ..ontology import Ontology
from . import game as g
from .connector import connector_sync
from .handlers import InProcessActionHandler


class Board:
    """The authoritative game state, optionally journaling every command.

    Journal entries are (turn, command text, state hash after applying),
    the replay file format.
    """

    def __init__(self, state: g.GameState, journal: list | None = None):
        self.state = state
        self.journal = journal

    def apply(self, commands: list) -> None:
        for command in commands:
            self.state = g.apply(self.state, [command])
            if self.journal is not None:
                self.journal.append(
                    (self.state.turn, command.to_text(), g.state_hash(self.state))
                )


class MicroCivSeat:
    """One player's seat at a board; implements the engine's environment."""

    def __init__(self, board: Board, player: int,
                 opponent: g.ScriptedPolicy | None = None):
        self.board = board
        self.player = player
        self.opponent = opponent

    @property
    def turn(self) -> int:
        return self.board.state.turn

    @property
    def state_version(self) -> int:
        return self.board.state.version

    def sync_graph(self, graph) -> None:
        connector_sync(self.board.state, graph, self.player)

    def snapshot(self):
        return self.board.state, self.player

    def submit(self, command: g.Command) -> None:
        self.board.apply([command])

    def end_phase_only(self) -> None:
        self.board.apply([g.Command("end_turn")])

    def advance_turn(self) -> None:
        self.end_phase_only()
        state = self.board.state
        if self.opponent is not None and state.phase == 1 - self.player:
            if state.winner is None:
                commands = self.opponent.plan(state)
            else:
                commands = [g.Command("end_turn")]
            self.board.apply(commands)

    def outcome(self) -> Outcome | None:
        oc = g.outcome(self.board.state, self.player)
        if oc is None:
            return None
        return Outcome(oc.kind, oc.final_turn)


def scripted_env(fixture: g.MapFixture, seed: int = 0,
                 journal: list | None = None) -> MicroCivSeat:
    """Fresh board with the scripted opponent in seat 1; returns seat 0."""
    board = Board(g.new_game(fixture, seed), journal=journal)
    return MicroCivSeat(board, 0, opponent=g.ScriptedPolicy())


def play_scripted_episode(
    kb: list[KnowledgeItem],
    ontology: Ontology,
    fixture: g.MapFixture,
    seed: int,
    resolver: ConflictResolver,
    limits: EpisodeLimits,
    turn_hook=None,
    journal: list | None = None,
) -> EpisodeRecord:
    """One episode of the rule-driven agent against the scripted opponent."""
    seat = scripted_env(fixture, seed, journal=journal)
    handlers = {"microciv": InProcessActionHandler(seat)}
    return run_episode(
        kb, ontology, seat, resolver, limits, handlers,
        seed=seed, turn_hook=turn_hook,
    )


def write_replay(journal: list) -> str:
    """Serialize a board journal as replay JSON Lines."""
    lines = [
        json.dumps({"turn": t, "command": c, "hash": h},
                   sort_keys=True, separators=(",", ":"))
        for t, c, h in journal
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def verify_replay(fixture: g.MapFixture, seed: int, replay_text: str) -> int | None:
    """Re-apply a replay against a fresh game; index of first divergence or None."""
    state = g.new_game(fixture, seed)
    for i, line in enumerate(replay_text.splitlines()):
        if not line.strip():
            continue
        entry = json.loads(line)
        state = g.apply(state, [g.parse_command_text(entry["command"])])
        if g.state_hash(state) != entry["hash"]:
            return i
    return None


@dataclass
class MatchResult:
    record_a: EpisodeRecord
    record_b: EpisodeRecord
    winner: int | None
    final_state: g.GameState


def play_match(
    kb_a: list[KnowledgeItem],
    kb_b: list[KnowledgeItem],
    ontology: Ontology,
    fixture: g.MapFixture,
    seed: int,
    resolver_a: ConflictResolver,
    resolver_b: ConflictResolver,
    limits: EpisodeLimits,
) -> MatchResult:
    """Two rule-driven agents on one board.

    The winner is the seat that wins the race, or the survivor when the
    other side is destroyed; a destroyed seat's engine stops acting but
    phases keep alternating so the match can still resolve.  Truncation
    leaves the winner as None.
    """
    board = Board(g.new_game(fixture, seed))
    seats = (MicroCivSeat(board, 0), MicroCivSeat(board, 1))
    engines = []
    for idx, (kb, resolver) in enumerate(((kb_a, resolver_a), (kb_b, resolver_b))):
        rng = random.Random(seed * 2 + idx)
        engine = InferenceEngine(
            kb, ontology, seats[idx], resolver,
            {"microciv": InProcessActionHandler(seats[idx])},
            limits, rng,
        )
        engine.record.seed = seed
        engines.append(engine)

    finals: list[Outcome | None] = [None, None]
    while True:
        state = board.state
        if state.winner is not None or state.turn >= limits.max_turns:
            break
        if all(f is not None for f in finals):
            break
        for idx in (0, 1):
            if board.state.phase != idx:
                continue
            if finals[idx] is None:
                oc = seats[idx].outcome()
                if oc is not None:
                    finals[idx] = oc
            if finals[idx] is None and board.state.winner is None:
                engines[idx].play_turn()
            else:
                seats[idx].end_phase_only()

    records = []
    for idx in (0, 1):
        oc = finals[idx] or seats[idx].outcome()
        if oc is None:
            oc = Outcome("truncated", board.state.turn)
        records.append(engines[idx].finalize(oc))

    winner: int | None = None
    if board.state.winner is not None:
        winner = board.state.winner
    elif records[0].outcome == "destroyed" and records[1].outcome != "destroyed":
        winner = 1
    elif records[1].outcome == "destroyed" and records[0].outcome != "destroyed":
        winner = 0
    return MatchResult(records[0], records[1], winner, board.state)
