"""Certificate-producing verifier for the extremality of the spherical
propeller partition.

The engine exhaustively covers the cube [0, pi]^3 of spherical-triangle
edge lengths with an adaptive net of boxes, eliminates every box by one of
four conservative tests with fully accounted floating-point error, and
emits a replayable elimination certificate that an independent checker
can re-derive record by record.
"""

from .constraints import (Case, EliminationOutcome, SearchBox, classify,
                          classify_trace)
from .geometry import EdgeTriple, PartitionData
from .rigor import EPS, ErrValue, GridAngle
from .traversal import (BoxSet, Certificate, EliminationRecord, RunConfig,
                        VerificationIncomplete, refine, resume, run,
                        seed_grid, verify_certificate)

__version__ = "0.1.0"

__all__ = [
    "Case", "EliminationOutcome", "SearchBox", "classify", "classify_trace",
    "EdgeTriple", "PartitionData", "EPS", "ErrValue", "GridAngle",
    "BoxSet", "Certificate", "EliminationRecord", "RunConfig",
    "VerificationIncomplete", "refine", "resume", "run", "seed_grid",
    "verify_certificate", "__version__",
]
