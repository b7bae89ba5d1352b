"""Simulation and analysis toolkit for self-contained LTE cells chained as relays.

Modules: ``rfmodel`` (two-ray propagation, RSRP), ``cellnet`` (nodes,
frequency plans, attachment, coverage), ``overlay`` (addressing, routing,
encapsulation), ``engine`` (drive-test simulation and latency model),
``analysis`` (tile maps, best server, CDFs, compliance, fits),
``scenario``/``logio`` (files) and ``cli``.
"""
from .errors import RelayCellError

__version__ = "0.1.0"

__all__ = ["RelayCellError", "__version__"]
