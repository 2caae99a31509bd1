"""Read-only figure rendering over the simulator's output formats.

The package never imports the simulator; it consumes the documented
run-directory and branch-CSV layouts and produces PNG or SVG figures.
"""

__version__ = "0.1.0"

from .figures import (
    render_branch,
    render_heatmap,
    render_norms,
    render_spectrum,
)
from .readers import (
    BranchData,
    RunData,
    SchemaError,
    read_branch,
    read_run,
)

__all__ = [
    "BranchData",
    "RunData",
    "SchemaError",
    "read_branch",
    "read_run",
    "render_branch",
    "render_heatmap",
    "render_norms",
    "render_spectrum",
]
