"""Low-lying zero statistics for families of L-functions.

Prime-side explicit-formula sums for Dirichlet families, exact second
moments of one-parameter elliptic families, symmetry constants,
Rankin-Selberg convolution and Katz-Sarnak density predictions.
"""

__version__ = "0.1.0"

from lowlying.errors import ContractViolation, ResourceLimitError

__all__ = ["ContractViolation", "ResourceLimitError", "__version__"]
