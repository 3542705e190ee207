"""Shared error types, mapped to wire error codes by the server."""


class BugWorldError(Exception):
    code = "ERROR"


class UnknownBugError(BugWorldError):
    code = "UNKNOWN_BUG"


class TargetNotFoundError(BugWorldError):
    code = "TARGET_NOT_FOUND"


class UnknownEnvError(BugWorldError):
    code = "UNKNOWN_ENV"


class NoEnvironmentError(BugWorldError):
    code = "NO_ENV"


class UnknownBehaviourError(BugWorldError):
    code = "UNKNOWN_BEHAVIOUR"


class EpisodeDoneError(BugWorldError):
    code = "EPISODE_DONE"


class MalformedMessageError(BugWorldError):
    code = "MALFORMED"
