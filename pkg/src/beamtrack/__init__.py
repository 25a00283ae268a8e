"""beamtrack: simulation and decision-time planning workbench for an
aerial manipulator tracking curves on a work surface.

Subpackages: geometry and dynamics (the physics core), envs (the
manipulator task and the pendulum sandbox), valuenet (from-scratch MLP and
transformer critics with exact gradients), learner (double-DQN training),
planner (snapshot-rollout beam search), meta (adaptive beam budgeting),
and harness (experiments, metrics, CLI).
"""

__version__ = "0.1.0"
