"""Distributed Kalman consensus estimation of freeway traffic density.

Subpackages:
  ctm       -- fundamental diagram and Godunov ground-truth simulator
  smm       -- switched linear section model, mode inference, observability
  partition -- overlapping sections, sensors, neighbor exchange
  filters   -- KF, local KF, consensus filter, cross-covariance variant
  bounds    -- stability/boundedness constants and runtime monitors
  metrics   -- disagreement, error, NEES, Lyapunov trackers
  harness   -- scenarios, experiment runner, benchmark, serialization
"""

__version__ = "0.1.0"
