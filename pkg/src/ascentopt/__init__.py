"""Multistage launch-vehicle ascent trajectory optimization.

Successive convexification over hp Radau pseudospectral collocation, with
a self-contained second-order cone solver, heat-flux and spent-stage
splash-down constraints, and nonlinear validation of converged solutions.
"""

__version__ = "0.1.0"
