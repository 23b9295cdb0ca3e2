"""Render figures from simulator output tables.

All inputs are the plain CSV tables written by the simulation package;
nothing here recomputes simulation quantities. Loaders are schema-locked:
a renamed or missing column fails fast with the offending name.
"""

__version__ = "0.1.0"

from .tables import (
    SchemaError,
    load_events,
    load_evolution,
    load_spikes,
    load_sweep,
)
from .render import (
    render_evolution,
    render_heatmaps,
    render_kernel,
    render_raster,
    render_reactions,
)
