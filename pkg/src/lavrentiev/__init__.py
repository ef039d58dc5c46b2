"""Numerical laboratory for a one-dimensional Lavrentiev gap.

Modules:

- ``func_model``: functions on [0, 1] with derivatives
- ``quadrature``: log-domain adaptive quadrature
- ``lavrentiev_core``: the gap functional, its conditions and bound chains
- ``smoothing``: truncate, mollify and boundary-correct with certificates
- ``interval_sets``: exact interval algebra and partition algorithms
- ``cli``: the ``lavrentiev`` command
"""

__version__ = "0.1.0"
