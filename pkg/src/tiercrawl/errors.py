"""Exception hierarchy shared across the crawler."""


class CrawlError(Exception):
    """Base class for every error raised by tiercrawl."""


class MalformedUri(CrawlError, ValueError):
    pass


class RelativeUri(MalformedUri):
    """A scheme-less reference was given where an absolute URI is required."""


class EmptyInput(CrawlError, ValueError):
    pass


class PolicyMismatch(CrawlError, ValueError):
    pass


class FetchError(CrawlError):
    """A dereference failed before a usable response arrived."""

    def __init__(self, message, uri=None, record=None):
        super().__init__(message)
        self.uri = uri
        self.record = record


class Timeout(FetchError):
    pass


class DnsFailure(FetchError):
    pass


class NonHtml(FetchError):
    pass


class HttpError(FetchError):
    def __init__(self, message, uri=None, status=None, record=None):
        super().__init__(message, uri, record)
        self.status = status


class BrowserUnavailable(CrawlError):
    pass


class NavigationTimeout(CrawlError):
    """The page never answered; ``capture`` holds whatever was recorded."""

    def __init__(self, message, capture=None):
        super().__init__(message)
        self.capture = capture


class CrashedTab(CrawlError):
    pass


class UnparseableMarkup(CrawlError, ValueError):
    pass


class DegenerateTrainingSet(CrawlError, ValueError):
    pass


class ModeMismatch(CrawlError, ValueError):
    pass


class UndefinedMetric(CrawlError, ArithmeticError):
    pass


class TooFewExamples(CrawlError, ValueError):
    pass


class ConfigError(CrawlError, ValueError):
    pass


class NoSeeds(ConfigError):
    pass


class SeedMismatch(ConfigError):
    pass


class ManifestMiss(CrawlError, KeyError):
    pass


class IoFailure(CrawlError, OSError):
    pass


class PortInUse(CrawlError, OSError):
    pass
