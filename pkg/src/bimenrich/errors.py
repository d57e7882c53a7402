"""Exception hierarchy shared by every stage of the pipeline."""


class BimEnrichError(Exception):
    """Base class for all package errors."""


class MeshFormatError(BimEnrichError):
    """Malformed or unsupported PLY content."""


class MeshIndexError(BimEnrichError, IndexError):
    """A face references a vertex that does not exist."""


class EmptyMeshError(BimEnrichError):
    """A mesh without vertices or triangles."""


class DatasetError(BimEnrichError):
    """Dataset too small, inconsistent, or carrying unknown labels."""


class FeatureArityError(BimEnrichError):
    """Feature vector length does not match what the model was trained on."""


class IdCollisionError(BimEnrichError):
    """Two objects share an id."""


class DegenerateGeometryError(BimEnrichError):
    """A required extent is zero."""


class ReferentialIntegrityError(BimEnrichError):
    """An edge references a node that is not in the graph."""


class GraphIntegrityError(BimEnrichError):
    """Graph violates relation pairing/symmetry or host multiplicity rules."""


class TurtleParseError(BimEnrichError):
    """Turtle text outside the supported subset."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class LookupFailure(BimEnrichError, KeyError):
    """Unknown node name."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class MultiplicityError(BimEnrichError):
    """A hosted node with more than one host."""


class PlanError(BimEnrichError):
    """Graph cannot be turned into a reconstruction plan."""


class AttributeMissingError(PlanError):
    """A node lacks an attribute the plan needs."""


class GeometryError(BimEnrichError):
    """Plan geometry that cannot be realized."""


class SpecError(BimEnrichError):
    """Infeasible synthetic scene specification."""
