"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class SizeError(ValueError):
    """A requested enumeration exceeds the configured size cap."""


class NonDominationError(ValueError):
    """P puts mass on a symbol that Q excludes."""


class PreconditionError(ValueError):
    """A lemma-style hypothesis (for example a "large n" condition) does not hold."""
