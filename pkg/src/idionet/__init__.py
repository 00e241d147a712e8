"""Seeded idiotypic network controllers for a simulated two-wheeled robot.

Subpackages by role: ``immune`` (repertoire maths), ``behaviors`` (antibody
actuation and the hand-designed controller), ``world``/``sim`` (the 2-D
simulator), ``ga`` (offline seed-set evolution) and ``harness``/``cli``
(experiment batches, statistics, command line).
"""

__version__ = "0.1.0"
