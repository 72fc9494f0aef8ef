"""Binary-support compressed sensing over simulated optical networks."""

try:
    from ._cimcs import *  # noqa: F401,F403  (installed layout)
    from ._cimcs import __doc__ as _doc
except ImportError:  # build-tree layout: extension sits next to the package
    from _cimcs import *  # noqa: F401,F403
    from _cimcs import __doc__ as _doc

__doc__ = _doc
__version__ = "0.1.0"
