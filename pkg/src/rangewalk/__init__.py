"""rangewalk: exact and Monte Carlo analysis of the range and trace-digraph
entropies of random walks on discrete groups."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    CertificateError,
    DescriptorMismatchError,
    InternalConsistencyError,
    MalformedCodeError,
    NotEscapingError,
    PrecisionError,
    PredictionError,
    RangewalkError,
    ResourceLimitError,
    StructuralError,
    UnknownTailError,
    UnsupportedGroupError,
    ValidationError,
)
from .groups import (  # noqa: F401
    GroupDescriptor,
    GroupElement,
    GroupEnumeration,
    StepDistribution,
    element_at,
    identity,
    index_of,
    inverse,
    mul,
    reversed_measure,
)
from .streams import RngStreamSpec, Stream  # noqa: F401
from .walk import (  # noqa: F401
    RangeState,
    TraceDigraph,
    Trajectory,
    WalkAccumulator,
    range_of,
    reversed_trajectory,
    sample_trajectory,
    trace_of,
)
