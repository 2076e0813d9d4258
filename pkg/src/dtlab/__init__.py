"""dtlab: a verification laboratory for DT-operator free probability.

Exact diagonal-Gaussian moment engine, scalar cumulant machinery, finite-n
random matrix Monte Carlo, Fisher/entropy-dimension functionals, and pencil
eigenspace linear algebra, exposed through a CLI and a FastAPI service.
"""

__version__ = "0.1.0"
