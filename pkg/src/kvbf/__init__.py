"""Mixed finite element solver for the unsteady Kelvin-Voigt-Brinkman-Forchheimer equations.

The package is split into ``mesh``, ``quadrature``, ``spaces``, ``assembly``,
``solver``, ``timeloop`` and ``mms`` (numerics) plus ``config``,
``scenarios``, ``output``, ``checks`` and ``cli`` (application layer).
Submodules are imported on demand so the command line can bound thread
counts before numpy is loaded.
"""

__version__ = "0.1.0"
