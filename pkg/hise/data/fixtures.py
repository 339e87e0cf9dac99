"""JSON-Lines fixtures: videos.jsonl and texts.jsonl, one record per line."""

from __future__ import annotations

import json
import logging
from collections.abc import Iterator
from pathlib import Path
from typing import Any

import numpy as np

from hise.data.records import (
    DatasetSplit,
    EntityDetection,
    RoleEntity,
    TextRecord,
    VideoRecord,
    validate_split,
)
from hise.errors import FixtureError

logger = logging.getLogger(__name__)

VIDEOS_FILE = "videos.jsonl"
TEXTS_FILE = "texts.jsonl"

Json = dict[str, Any]


def _read_lines(path: Path) -> Iterator[tuple[int, Json]]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise FixtureError(f"{path}: cannot read ({e.strerror or e})") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            raise FixtureError(f"{path}:{lineno}: invalid JSON ({e.msg})") from None
        if not isinstance(record, dict):
            raise FixtureError(f"{path}:{lineno}: expected a JSON object")
        yield lineno, record


def _int_list(value: Any, what: str) -> tuple[int, ...]:
    if not isinstance(value, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
        raise ValueError(f"{what} must be a list of integers")
    return tuple(value)


def _float_list(value: Any, what: str) -> tuple[float, ...]:
    if not isinstance(value, list) or not all(
        isinstance(v, int | float) and not isinstance(v, bool) for v in value
    ):
        raise ValueError(f"{what} must be a list of numbers")
    return tuple(float(v) for v in value)


def parse_video(raw: Json) -> VideoRecord:
    frames = raw["frames"]
    if not isinstance(frames, list) or not frames:
        raise ValueError("frames must be a non-empty list of rows")
    rows = [_float_list(row, "each frame") for row in frames]
    if len({len(row) for row in rows}) != 1:
        raise ValueError("frame rows differ in length")

    entities = raw["entities"]
    if not isinstance(entities, list):
        raise ValueError("entities must be a list with one list per frame")
    per_frame: list[tuple[EntityDetection, ...]] = []
    for frame in entities:
        if not isinstance(frame, list):
            raise ValueError("entities must be a list with one list per frame")
        detections = []
        for item in frame:
            bbox = _float_list(item["bbox"], "bbox")
            if len(bbox) != 4:
                raise ValueError("bbox must have 4 values")
            detections.append(
                EntityDetection(
                    object_token=_int_list([item["object"]], "object")[0],
                    attribute_token=_int_list([item["attribute"]], "attribute")[0],
                    roi=_float_list(item["roi"], "roi"),
                    bbox=(bbox[0], bbox[1], bbox[2], bbox[3]),
                    confidence=_float_list([item["conf"]], "conf")[0],
                )
            )
        per_frame.append(tuple(detections))

    video_id = raw["video_id"]
    if not isinstance(video_id, str):
        raise ValueError("video_id must be a string")
    return VideoRecord(
        video_id=video_id,
        frames=np.array(rows, dtype=np.float64),
        entities=tuple(per_frame),
        caption_tokens=_int_list(raw["caption_tokens"], "caption_tokens"),
    )


def parse_text(raw: Json) -> TextRecord:
    for key in ("text_id", "video_id"):
        if not isinstance(raw[key], str):
            raise ValueError(f"{key} must be a string")
    actions = raw.get("actions", [])
    entities = raw.get("entities", [])
    if not isinstance(actions, list) or not isinstance(entities, list):
        raise ValueError("actions and entities must be lists")
    return TextRecord(
        text_id=raw["text_id"],
        video_id=raw["video_id"],
        tokens=_int_list(raw["tokens"], "tokens"),
        actions=tuple(_int_list(action, "each action") for action in actions),
        entities=tuple(
            RoleEntity(
                tokens=_int_list(entity["tokens"], "entity tokens"),
                role_id=_int_list([entity["role_id"]], "role_id")[0],
                action_index=_int_list([entity["action_index"]], "action_index")[0],
            )
            for entity in entities
        ),
    )


def _parse_file(path: Path, parse: Any) -> list[Any]:
    records = []
    for lineno, raw in _read_lines(path):
        try:
            records.append(parse(raw))
        except KeyError as e:
            raise FixtureError(f"{path}:{lineno}: missing field {e.args[0]!r}") from None
        except (TypeError, ValueError) as e:
            raise FixtureError(f"{path}:{lineno}: {e}") from None
    return records


def load_fixtures(
    videos_path: Path,
    texts_path: Path,
    *,
    vocab_size: int | None = None,
    num_roles: int | None = None,
) -> DatasetSplit:
    """Parses both files, validates every record and resolves text -> video references.

    Token ids are checked against `vocab_size` and role ids against `num_roles` when given.
    """
    videos: list[VideoRecord] = _parse_file(Path(videos_path), parse_video)
    texts: list[TextRecord] = _parse_file(Path(texts_path), parse_text)
    split = DatasetSplit(videos=videos, texts=texts)
    validate_split(split, vocab_size=vocab_size, num_roles=num_roles)
    logger.info("loaded %d videos and %d texts from %s", len(videos), len(texts), Path(videos_path).parent)
    return split


def load_fixture_dir(
    data_dir: Path, *, vocab_size: int | None = None, num_roles: int | None = None
) -> DatasetSplit:
    return load_fixtures(
        data_dir / VIDEOS_FILE, data_dir / TEXTS_FILE, vocab_size=vocab_size, num_roles=num_roles
    )


def video_to_json(video: VideoRecord) -> Json:
    return {
        "video_id": video.video_id,
        "frames": video.frames.tolist(),
        "entities": [
            [
                {
                    "object": d.object_token,
                    "attribute": d.attribute_token,
                    "roi": list(d.roi),
                    "bbox": list(d.bbox),
                    "conf": d.confidence,
                }
                for d in frame
            ]
            for frame in video.entities
        ],
        "caption_tokens": list(video.caption_tokens),
    }


def text_to_json(text: TextRecord) -> Json:
    return {
        "text_id": text.text_id,
        "video_id": text.video_id,
        "tokens": list(text.tokens),
        "actions": [list(action) for action in text.actions],
        "entities": [
            {"tokens": list(e.tokens), "role_id": e.role_id, "action_index": e.action_index}
            for e in text.entities
        ],
    }


def _dump_lines(records: list[Json]) -> str:
    return "".join(json.dumps(record, separators=(",", ":")) + "\n" for record in records)


def write_fixtures(split: DatasetSplit, out_dir: Path) -> tuple[Path, Path]:
    """Writes videos.jsonl and texts.jsonl into out_dir; load_fixtures reads them back unchanged."""
    out_dir.mkdir(parents=True, exist_ok=True)
    videos_path = out_dir / VIDEOS_FILE
    texts_path = out_dir / TEXTS_FILE
    videos_path.write_text(_dump_lines([video_to_json(v) for v in split.videos]), encoding="utf-8")
    texts_path.write_text(_dump_lines([text_to_json(t) for t in split.texts]), encoding="utf-8")
    return videos_path, texts_path
