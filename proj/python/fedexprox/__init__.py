"""Federated proximal-point optimization with server-side extrapolation.

Thin Python surface over the C++ core: problem generators, Moreau-envelope
calculus, tau-nice partial-participation runs, and the iteration-complexity
constants used to pick extrapolation stepsizes.
"""

try:
    from ._fedexprox import *  # noqa: F401,F403
    from ._fedexprox import __version__  # noqa: F401
except ImportError:  # build-tree layouts put the module next to the package
    from _fedexprox import *  # noqa: F401,F403
    from _fedexprox import __version__  # noqa: F401
