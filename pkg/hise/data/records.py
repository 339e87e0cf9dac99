from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from hise.errors import FixtureError
from hise.numcore import Array


@dataclass(frozen=True)
class EntityDetection:
    object_token: int
    attribute_token: int
    roi: tuple[float, ...]
    bbox: tuple[float, float, float, float]  # x, y, w, h in [0, 1]
    confidence: float


@dataclass(frozen=True, eq=False)
class VideoRecord:
    video_id: str
    frames: Array  # N x d_frame
    entities: tuple[tuple[EntityDetection, ...], ...]  # one tuple of detections per frame
    caption_tokens: tuple[int, ...]

    @property
    def num_frames(self) -> int:
        return int(self.frames.shape[0])

    def detections(self) -> list[EntityDetection]:
        return [detection for frame in self.entities for detection in frame]


@dataclass(frozen=True)
class RoleEntity:
    tokens: tuple[int, ...]
    role_id: int
    action_index: int


@dataclass(frozen=True)
class TextRecord:
    text_id: str
    video_id: str
    tokens: tuple[int, ...]
    actions: tuple[tuple[int, ...], ...] = ()
    entities: tuple[RoleEntity, ...] = ()

    @property
    def occurrence_tokens(self) -> tuple[int, ...]:
        return self.tokens


@dataclass(frozen=True, eq=False)
class DatasetSplit:
    videos: list[VideoRecord]
    texts: list[TextRecord]
    _video_index: dict[str, int] = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self) -> None:
        self._video_index.update({video.video_id: i for i, video in enumerate(self.videos)})

    @cached_property
    def text_to_video(self) -> list[int]:
        """Index into `videos` of each text's ground-truth video."""
        return [self._video_index[text.video_id] for text in self.texts]

    @property
    def is_bijective(self) -> bool:
        return len(self.videos) == len(self.texts) and sorted(self.text_to_video) == list(
            range(len(self.videos))
        )

    def require_bijective(self) -> None:
        if not self.is_bijective:
            raise FixtureError(
                f"expected one text per video, got {len(self.texts)} texts for {len(self.videos)} videos"
            )

    def pairs(self) -> list[tuple[VideoRecord, TextRecord]]:
        return [(self.videos[v], text) for text, v in zip(self.texts, self.text_to_video, strict=True)]

    @property
    def d_frame(self) -> int:
        return int(self.videos[0].frames.shape[1])

    @property
    def d_roi(self) -> int | None:
        for video in self.videos:
            for detection in video.detections():
                return len(detection.roi)
        return None


def _check_token(token: int, vocab_size: int | None, where: str) -> None:
    if token < 0 or (vocab_size is not None and token >= vocab_size):
        bound = f" < {vocab_size}" if vocab_size is not None else ""
        raise FixtureError(f"{where}: token id {token} outside [0{bound})")


def validate_video(video: VideoRecord, vocab_size: int | None = None) -> None:
    """Raises FixtureError naming the video on any broken invariant."""
    where = f"video {video.video_id}"
    if video.frames.ndim != 2 or video.frames.shape[0] < 1 or video.frames.shape[1] < 1:
        raise FixtureError(f"{where}: needs at least one non-empty frame row")
    if not np.all(np.isfinite(video.frames)):
        raise FixtureError(f"{where}: frame features are not finite")
    if len(video.entities) != video.num_frames:
        raise FixtureError(
            f"{where}: {len(video.entities)} entity lists for {video.num_frames} frames"
        )
    if not video.caption_tokens:
        raise FixtureError(f"{where}: caption_tokens is empty")
    for token in video.caption_tokens:
        _check_token(token, vocab_size, f"{where} caption")

    roi_dim: int | None = None
    for frame, detections in enumerate(video.entities):
        for detection in detections:
            spot = f"{where} frame {frame}"
            _check_token(detection.object_token, vocab_size, f"{spot} object")
            _check_token(detection.attribute_token, vocab_size, f"{spot} attribute")
            _, _, w, h = detection.bbox
            if not all(0.0 <= c <= 1.0 for c in detection.bbox) or w <= 0 or h <= 0:
                raise FixtureError(f"{spot}: bbox {list(detection.bbox)} must lie in [0, 1] with w, h > 0")
            if not 0.0 <= detection.confidence <= 1.0:
                raise FixtureError(f"{spot}: confidence {detection.confidence} outside [0, 1]")
            if not all(math.isfinite(v) for v in detection.roi):
                raise FixtureError(f"{spot}: roi is not finite")
            if roi_dim is None:
                roi_dim = len(detection.roi)
            elif len(detection.roi) != roi_dim:
                raise FixtureError(f"{spot}: roi has {len(detection.roi)} values, expected {roi_dim}")


def validate_text(text: TextRecord, vocab_size: int | None = None, num_roles: int | None = None) -> None:
    where = f"text {text.text_id}"
    if not text.tokens:
        raise FixtureError(f"{where}: tokens is empty")
    for token in text.tokens:
        _check_token(token, vocab_size, where)
    for a, action in enumerate(text.actions):
        for token in action:
            _check_token(token, vocab_size, f"{where} action {a}")
    for e, entity in enumerate(text.entities):
        for token in entity.tokens:
            _check_token(token, vocab_size, f"{where} entity {e}")
        # entities of a text without actions stay unattached
        if entity.action_index < 0 or (text.actions and entity.action_index >= len(text.actions)):
            raise FixtureError(
                f"{where} entity {e}: action_index {entity.action_index} but the text has "
                f"{len(text.actions)} action(s)"
            )
        if entity.role_id < 0 or (num_roles is not None and entity.role_id >= num_roles):
            raise FixtureError(f"{where} entity {e}: role_id {entity.role_id} outside [0, {num_roles})")


def validate_split(split: DatasetSplit, vocab_size: int | None = None, num_roles: int | None = None) -> None:
    if not split.videos:
        raise FixtureError("no video records")
    if not split.texts:
        raise FixtureError("no text records")

    seen_videos: set[str] = set()
    d_frame = split.d_frame
    roi_dims: set[int] = set()
    for video in split.videos:
        if video.video_id in seen_videos:
            raise FixtureError(f"video {video.video_id}: duplicate video_id")
        seen_videos.add(video.video_id)
        validate_video(video, vocab_size)
        if video.frames.shape[1] != d_frame:
            raise FixtureError(
                f"video {video.video_id}: frames have {video.frames.shape[1]} features, expected {d_frame}"
            )
        roi_dims.update(len(d.roi) for d in video.detections())
    if len(roi_dims) > 1:
        raise FixtureError(f"roi dimensions differ across videos: {sorted(roi_dims)}")

    seen_texts: set[str] = set()
    paired: set[str] = set()
    for text in split.texts:
        if text.text_id in seen_texts:
            raise FixtureError(f"text {text.text_id}: duplicate text_id")
        seen_texts.add(text.text_id)
        if text.video_id not in seen_videos:
            raise FixtureError(f"text {text.text_id}: video_id {text.video_id!r} does not resolve")
        validate_text(text, vocab_size, num_roles)
        paired.add(text.video_id)

    for video in split.videos:
        if video.video_id not in paired:
            raise FixtureError(f"video {video.video_id}: no paired text")
