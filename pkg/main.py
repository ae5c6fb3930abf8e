"""Command-line entrypoint: builds the ``fsp`` parser from the YAML descriptors and runs a tool."""

from __future__ import annotations

import argparse
import importlib
import inspect
import json
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import yaml
from dotenv import load_dotenv

from tools.base import Command, CommandResult
from utils.constants import ERROR_STATUS, EXIT_INPUT_ERROR, EXIT_OK, EXIT_UNEXPECTED, SUCCESS_STATUS
from utils.errors import FisheyePoseError
from utils.logger import format_exception, get_logger

logger = get_logger(__name__)

ROOT = Path(__file__).resolve().parent

_ARG_TYPES = {"string": str, "number": float, "integer": int}


def _load_yaml(path: Path) -> dict[str, Any]:
    with path.open(encoding="utf-8") as handle:
        return yaml.safe_load(handle)


def load_descriptors(manifest_path: Path = ROOT / "manifest.yaml") -> tuple[dict[str, Any], list[dict[str, Any]]]:
    """Return the manifest and the command descriptors it lists, in order."""
    manifest = _load_yaml(manifest_path)
    return manifest, [_load_yaml(ROOT / entry) for entry in manifest.get("tools", [])]


def command_class(descriptor: dict[str, Any]) -> type[Command]:
    """Import the descriptor's source module and return its single `Command` subclass."""
    source = descriptor["extra"]["python"]["source"]
    module = importlib.import_module(Path(source).with_suffix("").as_posix().replace("/", "."))
    classes = [
        obj for _, obj in inspect.getmembers(module, inspect.isclass)
        if issubclass(obj, Command) and obj is not Command and obj.__module__ == module.__name__
    ]
    if len(classes) != 1:
        msg = f"{source} must define exactly one Command subclass, found {len(classes)}"
        raise RuntimeError(msg)
    return classes[0]


def _add_parameter(parser: argparse.ArgumentParser, parameter: dict[str, Any]) -> None:
    name = parameter["name"]
    flag = "--" + name.replace("_", "-")
    help_text = parameter.get("human_description", {}).get("en_US")
    kind = parameter.get("type", "string")
    if kind == "boolean":
        parser.add_argument(flag, dest=name, action="store_true", help=help_text)
        return
    kwargs: dict[str, Any] = {
        "dest": name,
        "required": bool(parameter.get("required", False)),
        "default": parameter.get("default"),
        "help": help_text,
    }
    if kind == "select":
        kwargs["choices"] = parameter.get("options", [])
    else:
        kwargs["type"] = _ARG_TYPES[kind]
    parser.add_argument(flag, **kwargs)


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, dict[str, Any]]]:
    manifest, descriptors = load_descriptors()
    parser = argparse.ArgumentParser(prog=manifest.get("program", "fsp"), description=manifest["description"]["en_US"])
    parser.add_argument("--version", action="version", version=f"%(prog)s {manifest['version']}")
    parser.add_argument("--json", dest="json_output", action="store_true",
                        help="Print one JSON object with status and results instead of text.")
    subparsers = parser.add_subparsers(dest="command", required=True)
    commands = {}
    for descriptor in descriptors:
        name = descriptor["identity"]["name"]
        sub = subparsers.add_parser(name, help=descriptor["description"]["human"]["en_US"])
        for parameter in descriptor.get("parameters", []):
            _add_parameter(sub, parameter)
        commands[name] = descriptor
    return parser, commands


def run(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv``, run the selected command, print its output and return the exit code."""
    parser, commands = build_parser()
    try:
        args = vars(parser.parse_args(argv))
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_INPUT_ERROR

    command = args.pop("command")
    json_output = args.pop("json_output")
    cls = command_class(commands[command])
    logger.debug("Running command %s with %s", command, args)
    try:
        result = cls().run(args)
    except FisheyePoseError as e:
        logger.error("Command %s failed: %s", command, format_exception(e))
        if json_output:
            _print_json({"status": ERROR_STATUS, "error": format_exception(e), "exit_code": e.exit_code})
        else:
            print(f"Failed to {cls.action}: {format_exception(e)}")
        return e.exit_code

    if json_output:
        _print_json({"status": SUCCESS_STATUS, "results": result.results})
    else:
        _print_lines(result)
    return EXIT_OK


def _print_lines(result: CommandResult) -> None:
    for line in result.lines:
        print(line)


def _print_json(payload: dict[str, Any]) -> None:
    print(json.dumps(payload, default=str))


def main() -> None:
    load_dotenv(override=False)
    try:
        sys.exit(run())
    except KeyboardInterrupt:
        logger.info("Received keyboard interrupt, shutting down")
        sys.exit(130)
    except Exception:
        logger.exception("Unexpected error occurred during command execution")
        sys.exit(EXIT_UNEXPECTED)


if __name__ == "__main__":
    main()
