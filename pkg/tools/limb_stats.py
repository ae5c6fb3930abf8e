"""Command computing per-person limb length statistics and reconstruction frequencies."""

from __future__ import annotations

from dataclasses import asdict
from pathlib import Path
from typing import Any

from tools.base import Command, CommandResult
from utils.config_builder import parse_json_document, write_json_document
from utils.errors import FisheyePoseError, KeypointFileError
from utils.logger import get_logger
from utils.plotting import plot_limb_boxes
from utils.schemas import LimbStatsRecord, PersonStatsRecord, SkeletonFile, StatsFile
from utils.skeleton import PersonStats, accumulate_stats

logger = get_logger(__name__)


def _fmt(value: float | None) -> str:
    return "-" if value is None else f"{value:.4f}"


def format_table(persons: list[PersonStats]) -> list[str]:
    """Plain-text table: one block per person, one row per limb."""
    lines = []
    for person in persons:
        lines.append(f"Person {person.person_id} ({person.frames} frames)")
        lines.append(f"{'limb':<22}{'freq':>7}{'count':>7}{'mean':>9}{'std':>9}{'min':>9}{'median':>9}{'max':>9}")
        for limb in person.limbs:
            lines.append(
                f"{limb.name:<22}{limb.frequency:>7.3f}{limb.count:>7d}{_fmt(limb.mean):>9}"
                f"{_fmt(limb.std):>9}{_fmt(limb.min):>9}{_fmt(limb.median):>9}{_fmt(limb.max):>9}",
            )
        lines.append("")
    return lines


class LimbStatsCommand(Command):
    """Aggregates a skeleton file into limb statistics (table, JSON, optional SVG)."""

    action = "compute limb statistics"

    def run(self, params: dict[str, Any]) -> CommandResult:
        in_path = params.get("in")
        out_path = params.get("out")
        svg_path = params.get("svg")

        try:
            if Path(in_path).is_file() and not Path(in_path).read_text(encoding="utf-8").strip():
                logger.info("Skeleton file %s is empty", in_path)
                document = SkeletonFile()
            else:
                document = parse_json_document(in_path, SkeletonFile, KeypointFileError)

            persons = accumulate_stats(record.to_skeleton() for record in document.records)
            stats = StatsFile(persons=[
                PersonStatsRecord(
                    person_id=p.person_id,
                    frames=p.frames,
                    limbs=[LimbStatsRecord(**asdict(limb)) for limb in p.limbs],
                )
                for p in persons
            ])
            if out_path:
                write_json_document(out_path, stats)
            if svg_path:
                plot_limb_boxes(svg_path, persons)
        except FisheyePoseError as e:
            logger.error("Statistics failed (in: %s): %s", in_path, e)
            raise

        logger.info(
            "Limb statistics computed (persons: %d, records: %d, out: %s, svg: %s)",
            len(persons), len(document.records), out_path or "-", svg_path or "-",
        )
        lines = format_table(persons) if persons else ["No skeleton records."]
        return CommandResult({"in": str(in_path), **stats.model_dump()}, "\n".join(lines).rstrip().split("\n"))
