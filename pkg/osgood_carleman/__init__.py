"""Numerical verification suites for Osgood-weight Carleman estimates.

The package evaluates every constructive object behind backward-uniqueness
results for parabolic operators whose coefficients are only Osgood-regular
in time: the weight ODE, Littlewood-Paley blocks, modified paraproducts,
coefficient mollification, Carleman inequality sides and the explicit
non-uniqueness counterexample.
"""

__version__ = "1.0.1"
