"""Kernel backend selection.

The hot loops (Gauss-Seidel phase sweeps, per-atom shape gradients) exist
twice: a Cython extension (`_speedups`) and a pure-numpy fallback
(`_python`). The compiled core is preferred when importable; set
FILM_SIM_BACKEND=python or =compiled to force a choice.
"""

import os

from . import _python

_ENV_VAR = "FILM_SIM_BACKEND"
_CHOICES = ("auto", "compiled", "python")


def _select():
    choice = os.environ.get(_ENV_VAR, "auto").lower()
    if choice not in _CHOICES:
        raise ValueError(f"{_ENV_VAR} must be one of {_CHOICES}, got {choice!r}")
    if choice == "python":
        return _python, False
    try:
        from . import _speedups
        return _speedups, True
    except ImportError:
        if choice == "compiled":
            raise ImportError(
                "FILM_SIM_BACKEND=compiled but the extension is not built; "
                "reinstall the package or use the python backend"
            ) from None
        return _python, False


def get_backend(name: str):
    """Kernel module for an explicit backend name ('python' or 'compiled')."""
    if name == "python":
        return _python
    if name == "compiled":
        from . import _speedups
        return _speedups
    raise ValueError(f"unknown backend {name!r}")


_impl, USING_COMPILED = _select()
BACKEND_NAME = "compiled" if USING_COMPILED else "python"

sweep_phases = _impl.sweep_phases
shape_grads_film_layer1 = _impl.shape_grads_film_layer1
shape_grads_film_layer2 = _impl.shape_grads_film_layer2
shape_grads_fim = _impl.shape_grads_fim
