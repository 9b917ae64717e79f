"""Exception hierarchy shared by all hypercell modules."""


class HypercellError(Exception):
    pass


# geometry
class GeometryError(HypercellError):
    pass


class EmptyCell(GeometryError):
    """Intersection has empty interior (width below tolerance)."""


class UnboundedCell(GeometryError):
    pass


class NotPositivelySpanning(GeometryError):
    """Direction tuple lies in a closed half sphere."""


class IllConditioned(GeometryError):
    pass


class DegenerateSample(GeometryError):
    """A sample whose geometry could not be built; dropped and counted."""


# directions
class DistributionError(HypercellError):
    pass


class EnvelopeViolation(DistributionError):
    pass


class SupportTooLarge(DistributionError):
    pass


class UnsupportedDistribution(DistributionError):
    pass


class RejectionStall(DistributionError):
    pass


# functionals
class QuadratureNotConverged(HypercellError):
    pass


# samplers
class ArrangementOverflow(HypercellError):
    pass


# estimators
class EmptyCondition(HypercellError):
    pass


class DegenerateGrid(HypercellError):
    pass


# cli
class ConfigError(HypercellError):
    pass


class CheckFailed(HypercellError):
    def __init__(self, failed):
        self.failed = list(failed)
        super().__init__("failed checks: " + ", ".join(self.failed))
