"""Exception hierarchy shared by the pipeline stages.

Every pipeline failure carries a ``module`` tag so the command line can
report which stage broke without parsing messages.
"""


class PipelineError(Exception):
    """Base class for failures inside one stage of the pipeline."""

    module = "pipeline"


class ChainError(PipelineError, ValueError):
    module = "chain"


class ConvergenceError(PipelineError, ArithmeticError):
    """The tridiagonal QL iteration did not converge for one eigenvalue."""

    module = "eigensolve"

    def __init__(self, index, iterations):
        super().__init__(
            f"QL iteration failed to converge for eigenvalue {index} "
            f"after {iterations} sweeps"
        )
        self.index = index
        self.iterations = iterations


class GridError(PipelineError, ValueError):
    module = "dynamics"


class BudgetError(PipelineError):
    """A sampling plan would need more samples than allowed."""

    module = "spectral"

    def __init__(self, needed, budget):
        super().__init__(f"sampling plan needs {needed} samples, budget is {budget}")
        self.needed = needed
        self.budget = budget


class FewerPeaksThanExpected(PipelineError):
    module = "spectral"

    def __init__(self, found, expected):
        super().__init__(
            f"found {found} resolvable peaks, expected {expected}; lines may be "
            "merged (near-degenerate spectrum) or suppressed (localization)"
        )
        self.found = found
        self.expected = expected


class PeakBelowThreshold(PipelineError):
    module = "spectral"

    def __init__(self, indices, min_weight):
        super().__init__(
            f"peaks {list(indices)} have weight below min_weight={min_weight:g}"
        )
        self.indices = list(indices)
        self.min_weight = min_weight


class NondegeneracyViolated(PipelineError, ValueError):
    module = "reconstruct"


class SignMagnitudeConflict(PipelineError):
    module = "reconstruct"

    def __init__(self, site, signed, norm):
        super().__init__(
            f"coupling {site}: signed solve gives |delta|={abs(signed):.6g} but the "
            f"column norm gives {norm:.6g}"
        )
        self.site = site
        self.signed = signed
        self.norm = norm


class NormCollapse(PipelineError, ArithmeticError):
    module = "reconstruct"

    def __init__(self, site, norm):
        super().__init__(
            f"column norm collapsed to {norm:.3g} while recovering coupling {site}; "
            "weights are inconsistent or the site count is wrong"
        )
        self.site = site
        self.norm = norm


class OracleError(PipelineError):
    module = "oracle"
