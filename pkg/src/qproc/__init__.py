"""
qproc — classical and quantum stochastic processes.

Modules
-------
qla         dense complex linear algebra on labelled tensor factors
channels    quantum channels (Kraus / Choi / superoperator)
tomo        POVMs, instruments, duals and tomography
proctensor  superchannels and multi-time process tensors
memory      Markovianity tests, memory measures and witnesses
classical   classical stochastic processes
"""
from . import _backend
from . import qla, channels, tomo, proctensor, memory, classical

__version__ = "0.1.0"

from ._backend import available as available_backends, use_backend


def backend():
    """Name of the active kernel backend (``"cython"`` or ``"python"``)."""
    return _backend.name


__all__ = ["qla", "channels", "tomo", "proctensor", "memory", "classical",
           "backend", "use_backend", "available_backends"]
