"""MicroCiv: a deterministic miniature turn-based strategy game, plus the
Connector and Action Handler adapters that bridge it to the rule engine."""
