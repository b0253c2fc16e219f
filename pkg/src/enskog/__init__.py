"""Event-driven stochastic particle simulation of the Boltzmann-Enskog equation.

The package has three layers: collision primitives (``geometry``,
``kernels``), the interacting particle process itself (``particles``), and
the verification layer that checks the process against the kinetic theory
it discretizes (``observables``, ``meanfield``, ``bounds``).  The
``experiments`` module wires those into reproducible named studies and the
``enskog`` console script drives them from line-based config files.
"""

__version__ = "0.1.0"
