"""Kernel backend selected at import: the compiled ``_xcore`` extension when it
is importable, otherwise the pure-Python ``_xcore_py`` mirror.

Set ``SOBMULT_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _xcore_py

if os.environ.get("SOBMULT_PURE_PYTHON", "") not in ("", "0"):
    core = _xcore_py
else:
    try:
        from . import _xcore as core
    except ImportError:  # extension not built
        core = _xcore_py

COMPILED = core is not _xcore_py
NAME = "compiled" if COMPILED else "python"

eval_program = core.eval_program
integrate_program = core.integrate_program
