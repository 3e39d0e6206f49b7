"""Static figure reproductions from openrg CLI table output.

Consumes only the CSV tables the openrg command line writes; nothing is
recomputed here, so every plotted value (including the gap guide and the
scaling-fit overlay) originates in the input files.
"""

from .figspec import FIGURE_IDS, FigureSpec, SchemaError
from .io import Table, read_table
from .render import gap_guide, render

__all__ = ["FIGURE_IDS", "FigureSpec", "SchemaError", "Table",
           "read_table", "gap_guide", "render"]

__version__ = "1.0.0"
