"""Composite adaptive tracking control with a deep network drift estimate.

Modules: :mod:`tensor_ops`, :mod:`dnn`, :mod:`plant`, :mod:`control_law`,
:mod:`observer` and the :mod:`sim` harness.
"""

from . import control_law, dnn, observer, plant, tensor_ops

__version__ = "0.1.0"

__all__ = ["control_law", "dnn", "observer", "plant", "tensor_ops", "__version__"]
