"""Exception hierarchy shared by every module."""


class LabError(Exception):
    """Base class; the CLI maps any subclass to exit status 1."""

    code = "lab_error"


class DomainError(LabError, ValueError):
    code = "domain_error"


class EncodingError(LabError, ValueError):
    code = "encoding_error"


class NotCovered(LabError, KeyError):
    code = "not_covered"

    def __str__(self):
        return Exception.__str__(self)


class PerturbationFailed(LabError):
    code = "perturbation_failed"


class ChannelError(LabError):
    code = "channel_error"


class BoundaryError(LabError):
    code = "boundary_error"


class CapError(LabError):
    code = "cap_error"


class PerfectCheckTimeout(LabError):
    code = "perfect_check_timeout"


class TopologyError(LabError):
    code = "topology_error"


class HorizonError(LabError):
    code = "horizon_error"


class ReportError(LabError):
    code = "report_error"
