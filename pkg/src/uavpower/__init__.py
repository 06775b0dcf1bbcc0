"""Sum uplink power minimisation for terminals served by one UAV.

Modules: ``model`` (link budget and constraints), ``altbeam``, ``location``
and ``bandwidth`` (the three blocks), ``coordinator`` (block coordinate
descent), ``bench`` and ``cli`` (experiments and command line).
"""

__version__ = "0.1.0"
