"""Exception hierarchy shared by all modules."""


class TreeMarketError(Exception):
    """Base class for every error raised by treemarkets."""


class MalformedTree(TreeMarketError):
    pass


class ProbabilityError(TreeMarketError):
    pass


class DimensionMismatch(TreeMarketError):
    pass


class BudgetExceeded(TreeMarketError):
    """An enumeration or refinement would exceed its configured cap."""


class InvalidGrid(TreeMarketError):
    pass


class RefinementBudgetExceeded(BudgetExceeded):
    pass


class SearchBudgetExceeded(BudgetExceeded):
    pass


class GridTooCoarse(TreeMarketError):
    pass


class NoAnalyticForm(TreeMarketError):
    pass


class NoConvergence(TreeMarketError):
    pass


class NotLinear(TreeMarketError):
    pass


class NegativeOrderNotAllowed(TreeMarketError):
    pass


class InfeasibleEverywhere(TreeMarketError):
    pass


class EmptyFeasibleSet(TreeMarketError):
    pass


class AllInfeasible(TreeMarketError):
    pass


class DegenerateCone(TreeMarketError):
    pass


class NotInterior(TreeMarketError):
    pass


class NotRelativeInterior(TreeMarketError):
    pass


class ConeMismatch(TreeMarketError):
    pass


class TargetMismatch(TreeMarketError):
    pass


class SingularGram(TreeMarketError):
    pass


class InconsistentScalarizations(TreeMarketError):
    pass


class SchemaError(TreeMarketError):
    """Model file failed validation; message carries the offending location."""
