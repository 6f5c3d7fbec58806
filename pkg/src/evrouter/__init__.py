"""Energy-optimal electric vehicle routing on road graphs with regeneration."""
from __future__ import annotations

__version__ = "0.1.0"
