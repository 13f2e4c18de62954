"""Genetic-fuzzy guidance for autonomous spacecraft inspection.

Relative CW/quaternion dynamics, inspection visibility geometry, a data-driven
Mamdani fuzzy engine, the per-axis fuzzy guidance law, an episode/Monte Carlo
harness and a GA that tunes the fuzzy controllers.
"""

__version__ = "0.1.0"
