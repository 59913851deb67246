"""kbrl: a multi-expert rule engine whose conflicts are resolved by a
Monte-Carlo learner, shipped with the MicroCiv miniature strategy game
as its built-in environment."""

__version__ = "0.1.0"
