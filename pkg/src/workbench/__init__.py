from .cache import OracleCache, cached_low_lying
from .manifest import ArtifactWriter, RunManifest
from .pipelines import COMMANDS, PipelineContext
from .plotdata import PLOT_TARGETS, emit_plotdata

__all__ = (
    "COMMANDS",
    "PLOT_TARGETS",
    "ArtifactWriter",
    "OracleCache",
    "PipelineContext",
    "RunManifest",
    "cached_low_lying",
    "emit_plotdata",
)
