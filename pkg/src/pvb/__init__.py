"""Pandora's multi-variable branching: abstract model, distribution fitting,
probabilistic-lookahead stopping, simulation harness, and a miniature
branch-and-bound solver wired to the same branching rule."""

__version__ = "0.1.0"
