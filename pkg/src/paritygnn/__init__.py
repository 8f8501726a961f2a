"""Winning-region prediction for parity games with graph neural networks."""
from .games import Arena, ParityGame, Strategy, WinningRegions, validate_arena
from .solvers import attractor, play_winner, solve_bruteforce, solve_zielonka

__version__ = "0.1.0"
