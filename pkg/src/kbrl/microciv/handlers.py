"""Action handlers: the transports that carry a fired rule's commands to
the game.

Two transports exist.  The in-process handler parses the command text
and submits it straight to the seat it was configured with.  The file
handler does the same but also appends every command line to a
dedicated file, one command per line; the file can also be consumed as
an input channel by an external driver via :class:`CommandFileTransport`.

``stage`` validates (a bad command aborts the whole DO program before
anything is committed); ``commit`` delivers.
"""

from __future__ import annotations

from pathlib import Path

from .game import Command, parse_command_text


class InProcessActionHandler:
    """Parses command text and applies it to a game seat immediately."""

    def __init__(self, seat):
        self.seat = seat

    def stage(self, text: str) -> Command:
        return parse_command_text(text)

    def commit(self, staged: Command) -> None:
        self.seat.submit(staged)


class FileActionHandler:
    """Appends command lines to a file, optionally also driving a seat."""

    def __init__(self, path: str | Path, seat=None):
        self.path = Path(path)
        self.seat = seat

    def stage(self, text: str):
        return text, parse_command_text(text)

    def commit(self, staged) -> None:
        text, command = staged
        with self.path.open("a", encoding="utf-8") as fp:
            fp.write(text + "\n")
        if self.seat is not None:
            self.seat.submit(command)


class CommandFileTransport:
    """The consuming side of the command file: read the queued lines once."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def append(self, line: str) -> None:
        with self.path.open("a", encoding="utf-8") as fp:
            fp.write(line + "\n")

    def consume(self) -> list[str]:
        """Return all queued lines and empty the file."""
        if not self.path.exists():
            return []
        lines = [
            line for line in self.path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        self.path.write_text("", encoding="utf-8")
        return lines
