try:
    from ._renormlab import *  # noqa: F401,F403
except ImportError:  # build-tree layout keeps the extension beside the package
    from _renormlab import *  # noqa: F401,F403
