"""Command base class and result type.

A command receives its parsed options as a dict, does its work and returns a
`CommandResult`. Failures are raised as `FisheyePoseError`; the entrypoint
turns them into the process exit code.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, ClassVar

from utils.config_builder import Settings, load_settings


@dataclass(frozen=True)
class CommandResult:
    """Machine-readable results plus the lines printed for a human."""

    results: dict[str, Any]
    lines: list[str] = field(default_factory=list)


def option(params: dict[str, Any], name: str, default: Any) -> Any:
    """The option's value, or ``default`` when it was not given on the command line."""
    value = params.get(name)
    return default if value is None else value


class Command:
    """One ``fsp`` subcommand. Subclasses set ``action`` and implement ``run``."""

    action: ClassVar[str] = "run command"

    def __init__(self, settings: Settings | None = None) -> None:
        self.settings = settings if settings is not None else load_settings()

    def run(self, params: dict[str, Any]) -> CommandResult:
        raise NotImplementedError
