import logging
import json
import sys

# attributes every LogRecord carries; anything else came in through extra=
_RESERVED = frozenset(
    vars(logging.LogRecord("", logging.INFO, "", 0, "", (), None)).keys()
) | {"message", "asctime", "taskName"}


class JsonFormatter(logging.Formatter):
    def format(self, record):
        log = {
            "level": record.levelname,
            "message": record.getMessage(),
            "logger": record.name,
            "time": self.formatTime(record, self.datefmt)
        }
        for key, value in vars(record).items():
            if key not in _RESERVED and key not in log:
                log[key] = value
        return json.dumps(log, default=str)


def setup_logging(level: str | int = logging.INFO):
    # stdout carries command output
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(JsonFormatter())

    root = logging.getLogger()
    root.setLevel(level.upper() if isinstance(level, str) else level)
    root.handlers = [handler]
