"""Exception hierarchy shared by every flatnet module."""


class FlatnetError(Exception):
    """Base class for domain errors; the CLI maps these to exit status 1."""

    code = "FlatnetError"

    def __init__(self, message="", **details):
        super().__init__(message)
        self.details = details

    def record(self):
        out = {"error": self.code, "message": str(self)}
        out.update({k: _plain(v) for k, v in self.details.items()})
        return out


def _plain(value):
    if isinstance(value, (int, float, str, bool)) or value is None:
        return value
    return str(value)


def _make(name, doc, base=FlatnetError):
    return type(name, (base,), {"__doc__": doc, "code": name})


# surface
EdgeVectorMismatch = _make("EdgeVectorMismatch", "Glued edges are not translates of each other.")
UnpairedEdge = _make("UnpairedEdge", "An edge is glued zero or several times.")
NonPositiveArea = _make("NonPositiveArea", "A polygon is degenerate or clockwise.")
LambdaOutOfRange = _make("LambdaOutOfRange", "Slit length outside (0, 1).")
ZeroDirection = _make("ZeroDirection", "Direction vector is zero.")
MixedField = _make("MixedField", "Scalars from different quadratic fields were combined.")
BudgetExceeded = _make("BudgetExceeded", "A search exceeded its configured cap.")
PreconditionViolated = _make("PreconditionViolated", "An operation precondition does not hold.")

# tracing
HitSingularity = _make("HitSingularity", "A straight-line trajectory ran into a cone point.")

# delaunay
DegenerateCocircular = _make("DegenerateCocircular", "Four or more cocircular vertices.")
RadiusTooSmall = _make("RadiusTooSmall", "Circumradius smaller than the requested square.")
EdgeTooLong = _make("EdgeTooLong", "Delaunay edge longer than the configured bound.")
NetworkDisconnected = _make("NetworkDisconnected", "Network graph is not connected.")

# dynamics
IncompleteSection = _make("IncompleteSection", "Arc is not a full transversal within the time bound.")

# buffers
VerticalGamma = _make("VerticalGamma", "Saddle connection is vertical.")
TracingBudgetExceeded = _make("TracingBudgetExceeded", "Strip tracing exceeded its cap.", BudgetExceeded)
DeltaUnachievable = _make("DeltaUnachievable", "No buffer reaches the requested dimension product.")
MeasureOverflow = _make("MeasureOverflow", "Set measure exceeds the total measure.")

# nonergodic
DegenerateComponents = _make("DegenerateComponents", "Balance time undefined for these components.")
GeometryBudget = _make("GeometryBudget", "Polygon clipping exceeded its cap.", BudgetExceeded)

# io
ParseError = _make("ParseError", "Malformed surface or state file.")
FieldMismatch = _make("FieldMismatch", "File mixes scalars from different fields.", ParseError)
