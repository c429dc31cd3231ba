"""plotkit: figures and fitted-parameter sidecars for vortexlab outputs."""

__version__ = "0.1.0"

from .figures import KINDS, FigureSpec, read_sidecar, render, sidecar_path
from .io import RunDir, SchemaError, fit_log_log, load_run_dir, load_summary

__all__ = [
    "__version__",
    "KINDS",
    "FigureSpec",
    "read_sidecar",
    "render",
    "sidecar_path",
    "RunDir",
    "SchemaError",
    "fit_log_log",
    "load_run_dir",
    "load_summary",
]
