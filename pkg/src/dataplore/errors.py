"""Domain error hierarchy.

Every error carries a stable ``code`` (the class name) that surfaces
unchanged through the CLI (exit message) and the HTTP API (error body),
plus an optional ``location`` for errors that point at a row/column/step.
"""

from __future__ import annotations


class ExploreError(Exception):
    """Base class for all domain errors."""

    def __init__(self, message: str, *, location: str | None = None):
        super().__init__(message)
        self.message = message
        self.location = location

    @property
    def code(self) -> str:
        return type(self).__name__

    def to_json(self) -> dict:
        body = {"code": self.code, "message": self.message}
        if self.location is not None:
            body["location"] = self.location
        return body


# -- catalog ----------------------------------------------------------------

class MalformedCsv(ExploreError):
    pass


class TypeCoercion(ExploreError):
    pass


class DuplicateIdentifier(ExploreError):
    pass


class MissingIdentifier(ExploreError):
    pass


class UnknownTable(ExploreError):
    pass


class UnknownColumn(ExploreError):
    pass


class UnknownColumnInSynonym(ExploreError):
    pass


class DuplicateSynonym(ExploreError):
    pass


class UnknownJoinKey(ExploreError):
    pass


# -- sets -------------------------------------------------------------------

class BaseTableMismatch(ExploreError):
    pass


class BothEmpty(ExploreError):
    pass


class UnknownSetId(ExploreError):
    pass


# -- exploration operators ----------------------------------------------------

class UnknownAttribute(ExploreError):
    pass


class TypeMismatch(ExploreError):
    pass


class NonCategoricalAttribute(ExploreError):
    pass


class EmptyExamples(ExploreError):
    pass


class NoNumericFeatures(ExploreError):
    pass


class MissingTaxonomy(ExploreError):
    pass


class BrokenJoinPath(ExploreError):
    pass


class EmptyDistribution(ExploreError):
    pass


# -- query compiler -----------------------------------------------------------

class InvalidAst(ExploreError):
    pass


class MissingIdentifierProjection(ExploreError):
    pass


class SetTooLargeForInList(ExploreError):
    pass


class EmptySet(ExploreError):
    pass


# -- NL frontend / explainer ---------------------------------------------------

class NoInterpretation(ExploreError):
    pass


class MissingTemplate(ExploreError):
    pass


class NoPathBetweenTables(ExploreError):
    pass


# -- recommendations -----------------------------------------------------------

class EmptySession(ExploreError):
    pass


# -- pipelines and evaluation ----------------------------------------------------

class UnknownOperator(ExploreError):
    pass


class StepFailure(ExploreError):
    """Wraps the error that stopped a pipeline run; earlier outputs survive."""

    def __init__(self, step_id: str, cause: Exception, *, outputs=None, metrics=None):
        super().__init__(f"step {step_id} failed: {cause}", location=step_id)
        self.step_id = step_id
        self.cause = cause
        self.outputs = outputs if outputs is not None else {}
        self.metrics = metrics if metrics is not None else []


class ReplayDivergence(ExploreError):
    def __init__(self, step_id: str, message: str):
        super().__init__(message, location=step_id)
        self.step_id = step_id


class UnknownVersion(ExploreError):
    pass


class SchemaViolation(ExploreError):
    pass


class EmptyGold(ExploreError):
    pass


# -- gateway --------------------------------------------------------------------

class UnknownDataset(ExploreError):
    pass


class UnknownSession(ExploreError):
    pass


class UnknownStep(ExploreError):
    pass


class SessionBusy(ExploreError):
    pass


class NoCurrentSet(ExploreError):
    pass


class InvalidBacktrack(ExploreError):
    pass


class NoPendingInterpretations(ExploreError):
    pass
