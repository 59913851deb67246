"""Scalar value kinds and comparison semantics shared by the graph store,
the rule language evaluator, and graph queries.

Values are plain Python scalars (str, int, float, bool) or homogeneous
lists of them.  Comparison rules:

* ``==`` / ``!=`` never raise: values of different kinds are simply
  unequal (ints and floats compare numerically).
* Ordering operators require two numbers or two strings, anything else
  is a rule-authoring bug and raises :class:`EvaluationError`.
* ``in`` requires a list on the right-hand side.
* A missing operand (``MISSING``) makes any comparison false; presence
  is tested with the dedicated ``exists`` operator, not with ``!=``.
"""

from __future__ import annotations

from typing import Any

KINDS = ("string", "integer", "float", "boolean")
LIST_KINDS = tuple(f"list[{k}]" for k in KINDS)


class EvaluationError(Exception):
    """A condition compared incompatible kinds (a rule-authoring bug)."""


class _Missing:
    """Sentinel for an absent attribute value."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "MISSING"


MISSING = _Missing()

COMPARISON_OPS = ("==", "!=", "<", "<=", ">", ">=", "in")


def kind_of(value: Any) -> str | None:
    """Return the kind name for a scalar or list value, None if unsupported."""
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, int):
        return "integer"
    if isinstance(value, float):
        return "float"
    if isinstance(value, str):
        return "string"
    if isinstance(value, list):
        if not value:
            return "list[string]"  # empty lists are kind-compatible with any list
        inner = {kind_of(v) for v in value}
        if len(inner) == 1 and None not in inner:
            k = inner.pop()
            if k in KINDS:
                return f"list[{k}]"
        if inner <= {"integer", "float"}:
            return "list[float]"
        return None
    return None


def matches_kind(value: Any, kind: str) -> bool:
    """Check a value against a declared kind; ints are accepted for floats."""
    if kind == "boolean":
        return isinstance(value, bool)
    if kind == "integer":
        return isinstance(value, int) and not isinstance(value, bool)
    if kind == "float":
        return (isinstance(value, float) or isinstance(value, int)) and not isinstance(
            value, bool
        )
    if kind == "string":
        return isinstance(value, str)
    if kind.startswith("list[") and kind.endswith("]"):
        inner = kind[5:-1]
        return isinstance(value, list) and all(matches_kind(v, inner) for v in value)
    return False


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def compare_values(op: str, left: Any, right: Any) -> bool:
    """Apply a comparison operator under the module's cross-kind rules."""
    if left is MISSING or right is MISSING:
        return False
    if op == "==":
        return _equal(left, right)
    if op == "!=":
        return not _equal(left, right)
    if op == "in":
        if not isinstance(right, list):
            raise EvaluationError(
                f"'in' needs a list on the right, got {type(right).__name__}"
            )
        return any(_equal(left, item) for item in right)
    if op in ("<", "<=", ">", ">="):
        if _is_number(left) and _is_number(right):
            pass
        elif isinstance(left, str) and isinstance(right, str):
            pass
        else:
            raise EvaluationError(
                f"cannot order {type(left).__name__} against {type(right).__name__}"
            )
        if op == "<":
            return left < right
        if op == "<=":
            return left <= right
        if op == ">":
            return left > right
        return left >= right
    raise EvaluationError(f"unknown comparison operator {op!r}")


def _equal(left: Any, right: Any) -> bool:
    if isinstance(left, bool) != isinstance(right, bool):
        return False
    if _is_number(left) and _is_number(right):
        return left == right
    if type(left) is not type(right):
        return False
    return left == right
