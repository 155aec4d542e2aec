"""Model-sensitivity verification for machine unlearning.

Thin re-export of the compiled extension. Installed builds place the
extension inside this package; in-tree builds put it on PYTHONPATH next to
the build directory.
"""

try:
    from ._truvrf import *  # noqa: F401,F403
    from ._truvrf import __doc__  # noqa: F401
except ImportError:
    from _truvrf import *  # noqa: F401,F403
    from _truvrf import __doc__  # noqa: F401
