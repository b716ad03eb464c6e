"""Visualization for homlab experiment outputs.

Pure presentation: reads the runner's results.csv and grid dumps and
renders images.  Never recomputes numerical results — fitted slopes and
reference exponents are taken from the CSV as-is.
"""

from .core import PlotError, render_field, render_rates

__all__ = ["PlotError", "render_rates", "render_field"]
__version__ = "0.1.0"
