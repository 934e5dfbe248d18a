"""Agent-based SIS hidden Markov model with particle filtering and particle MCMC."""

from .main import cli_main

__all__ = ["cli_main"]
