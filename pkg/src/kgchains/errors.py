"""Exception types shared across the package."""


class KGChainsError(Exception):
    """Base class for all package errors."""


class FormatError(KGChainsError):
    """Malformed input file. Carries a line number when one is known."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        prefix = ""
        if path is not None:
            prefix += f"{path}:"
        if line is not None:
            prefix += f"{line}: "
        elif path is not None:
            prefix += " "
        super().__init__(prefix + message)


class UnknownEntityError(KGChainsError):
    """An entity id does not resolve in the loaded graph."""

    def __init__(self, entity_id, context=""):
        self.entity_id = entity_id
        msg = f"unknown entity id {entity_id!r}"
        if context:
            msg += f" ({context})"
        super().__init__(msg)


class AmbiguousNameError(KGChainsError):
    """A name resolves to more than one entity."""

    def __init__(self, name, candidates):
        self.name = name
        self.candidates = list(candidates)
        super().__init__(
            f"name {name!r} is ambiguous; candidates: {', '.join(self.candidates)}"
        )


class ContractViolation(KGChainsError):
    """A precondition or cross-module contract was violated."""


class GatewayError(KGChainsError):
    """The LLM/RAG backend failed or returned an unusable response."""


class GatewayTimeout(GatewayError):
    """The backend did not respond within the configured timeout."""
