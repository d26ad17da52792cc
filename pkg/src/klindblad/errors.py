"""Exception types shared across the package.

The CLI maps these onto its exit-code contract, so library code should raise
the most specific class that applies rather than bare ValueError/RuntimeError.
"""


class ConfigError(ValueError):
    """Invalid run configuration (bad flag combination, malformed config file)."""


class ResourceLimitError(RuntimeError):
    """A request would exceed the dense-storage guardrail."""


class NumericalError(RuntimeError):
    """A numerical routine failed or produced an unusable result."""


class EigensolverError(NumericalError):
    """Dense eigendecomposition failed; message carries a matrix fingerprint."""


class NonPositiveKossakowskiError(NumericalError):
    """Kossakowski matrix has an eigenvalue below the PSD tolerance."""


class DegenerateWeightError(ValueError):
    """A perturbative formula was requested at a weight with a degenerate neighbor."""


class SpectralAnalysisError(ValueError):
    """Spectral statistics requested on unsuitable input (e.g. too few eigenvalues)."""
