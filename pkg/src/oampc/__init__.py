"""Occlusion-aware NMPC navigation stack.

Simulated 360-degree range sensing, occlusion-boundary detection, forward
reachable sets for hidden and visible agents, and a receding-horizon planner
with a terminal stopping constraint, closed in a loop with full logging.
"""

__version__ = "0.1.0"
