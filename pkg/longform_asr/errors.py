#!/usr/bin/env python3


class LongformError(Exception):
    pass


class ValidationError(LongformError, ValueError):
    pass


class ParseError(LongformError):
    def __init__(self, line, message):
        self.line = line
        super().__init__("line %d: %s" % (line, message))


# a well-formed line whose values break a record invariant
class InvalidRecordError(ParseError, ValidationError):
    pass


class SerializationError(LongformError):
    pass


class LayoutError(ValidationError):
    pass


class ConfidenceError(LongformError):
    pass


class KernelError(ValidationError):
    pass
