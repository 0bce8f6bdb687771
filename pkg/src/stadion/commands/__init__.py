"""Command implementations behind the ``stadion`` CLI.

Each module implements one command as a plain function that takes validated
parameters and returns a response dict (``success``, ``data``, ``message``,
``stage``, ``error``) instead of raising, so the CLI only has to print the
response and map it to an exit status.

Module layout:
    select.py     -- Stadion model selection with report, CSV and SVG artifacts
    paths.py      -- Stability paths only (no selection)
    benchmark.py  -- Methods compared over a directory of labeled datasets
    generate.py   -- Synthetic labeled fixtures
    utils.py      -- Shared response, input and artifact helpers
"""

from __future__ import annotations

from .benchmark import recompute_summary, run_benchmark, summarize
from .generate import run_gen
from .paths import run_paths
from .select import run_select
from .utils import exit_code, handle_command_error, make_response

__all__ = [
    "exit_code",
    "handle_command_error",
    "make_response",
    "recompute_summary",
    "run_benchmark",
    "run_gen",
    "run_paths",
    "run_select",
    "summarize",
]
