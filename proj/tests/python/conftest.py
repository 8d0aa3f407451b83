"""Makes the smoke tests runnable against either an installed package or the
in-tree CMake build (python/ package + build/bindings extension)."""

import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parents[2]

try:
    import driftfit  # noqa: F401
except ImportError:
    sys.path.insert(0, str(ROOT / "python"))
    sys.path.insert(0, str(ROOT / "build" / "bindings"))
