"""ReSpark: reuse the analysis logic of existing data reports on new datasets.

The pipeline deduces a dependency tree of analysis segments (objective,
transformation, insight) from a reference report, adapts each segment to a
new tabular dataset through LLM calls and sandboxed script execution, and
organizes the results into a new report. Everything runs fully offline
against a scripted mock gateway; a FastAPI service and a CLI expose the
same operations.
"""

__version__ = "0.1.0"
