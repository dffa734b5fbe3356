"""Mean-field frozen percolation laboratory: exact simulation, deterministic
solvers and limit-law checks."""

__version__ = "0.1.0"
