"""Exception hierarchy. Every error carries a stable ``code`` used by the CLI
and the HTTP service to report machine-readable failures."""


class ElimkitError(Exception):
    code = "error"
    exit_code = 1


class ValidationError(ElimkitError):
    """Bad arguments, configs, or data that violate a declared invariant."""

    code = "validation"
    exit_code = 2


class SchemaError(ElimkitError):
    """Structurally wrong input file (missing column, bad header, ...)."""

    code = "schema"
    exit_code = 2


class ParseError(ElimkitError):
    """Cell-level parse failure, addressed by row and column."""

    code = "parse"
    exit_code = 2

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class ClassMismatchError(ElimkitError):
    """Model and dataset disagree on the class set."""

    code = "class-mismatch"
    exit_code = 1


class TrainingDivergedError(ElimkitError):
    """Loss became non-finite during gradient training."""

    code = "divergence"
    exit_code = 1

    def __init__(self, epoch):
        super().__init__(f"training diverged (non-finite loss) at epoch {epoch}")
        self.epoch = epoch


class SingularCovarianceError(ElimkitError):
    code = "singular-covariance"
    exit_code = 1


class DegenerateMatrixError(ElimkitError):
    """Confusion matrix collapses the kappa denominator to zero."""

    code = "degenerate-matrix"
    exit_code = 1


class BorderlineCaseError(ElimkitError):
    """Most probable class is not unique; interval search is undefined."""

    code = "borderline-case"
    exit_code = 1


class PersistenceError(ElimkitError):
    code = "persistence"
    exit_code = 1


class CorruptFileError(PersistenceError):
    code = "corrupt-file"


class VersionMismatchError(PersistenceError):
    code = "version-mismatch"
