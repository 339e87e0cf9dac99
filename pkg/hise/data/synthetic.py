"""Deterministic synthetic video/text pairs built from latent scenes.

A scene is (subject, action, object, place, attribute). Frames are a fixed per-scene
prototype (the sum of one random row per factor) plus Gaussian noise; detections, the
caption and the role parse all re-state the scene, so the semantic paths see clean
signal even when frame noise hides it.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from hise.config import RunConfig
from hise.constants import ROLE_AGENT, ROLE_LOCATION, ROLE_PATIENT
from hise.data.records import (
    DatasetSplit,
    EntityDetection,
    RoleEntity,
    TextRecord,
    VideoRecord,
    validate_split,
)
from hise.errors import ConfigError

logger = logging.getLogger(__name__)

SCENE_FACTORS = ("subjects", "actions", "objects", "places", "attributes")
CAPTION_LENGTH = 5


def _bbox(rng: np.random.Generator) -> tuple[float, float, float, float]:
    x, y = rng.uniform(0.0, 0.5, size=2)
    w, h = rng.uniform(0.1, 0.5, size=2)
    return float(x), float(y), float(w), float(h)


def generate_synthetic(config: RunConfig, seed: int | None = None) -> DatasetSplit:
    """A bijective split of `config.pairs` distinct scenes; a pure function of (config, seed)."""
    config.vocab.validate()
    if config.num_roles < 3:
        raise ConfigError(f"num_roles: synthetic role parses need 3 roles, got {config.num_roles}")
    if config.max_text_len < CAPTION_LENGTH + 1:
        raise ConfigError(
            f"max_text_len: synthetic captions need {CAPTION_LENGTH + 1} positions, got {config.max_text_len}"
        )

    seed = config.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    ranges = config.vocab.ranges()
    sizes = tuple(len(ranges[kind]) for kind in SCENE_FACTORS)
    total = math.prod(sizes)
    if config.pairs > total:
        raise ConfigError(f"pairs: vocab only allows {total} distinct scenes, got {config.pairs}")

    factor_rows = {kind: rng.standard_normal((len(ranges[kind]), config.d_frame)) for kind in SCENE_FACTORS}
    object_roi = rng.standard_normal((config.vocab_size, config.d_roi))
    attribute_roi = rng.standard_normal((config.vocab_size, config.d_roi))
    nouns = np.array(list(ranges["subjects"]) + list(ranges["objects"]))
    attributes = np.array(list(ranges["attributes"]))

    def detect(token: int, attr: int, confidence: float) -> EntityDetection:
        roi = object_roi[token] + attribute_roi[attr] + config.noise_sigma * rng.standard_normal(config.d_roi)
        return EntityDetection(
            object_token=token,
            attribute_token=attr,
            roi=tuple(float(v) for v in roi),
            bbox=_bbox(rng),
            confidence=float(confidence),
        )

    # true detections clear the selection threshold, distractors fall below it
    threshold = config.conf_threshold
    scene_ids = rng.choice(total, size=config.pairs, replace=False)
    videos: list[VideoRecord] = []
    texts: list[TextRecord] = []
    for i, scene_id in enumerate(scene_ids):
        offsets = np.unravel_index(int(scene_id), sizes)
        subject, action, obj, place, attribute = (
            ranges[kind][int(offset)] for kind, offset in zip(SCENE_FACTORS, offsets, strict=True)
        )
        rows = [factor_rows[kind][int(offset)] for kind, offset in zip(SCENE_FACTORS, offsets, strict=True)]
        prototype = np.sum(rows, axis=0)
        noise = rng.standard_normal((config.frames_per_video, config.d_frame))
        frames = prototype[None, :] + config.noise_sigma * noise

        per_frame: list[tuple[EntityDetection, ...]] = []
        for _ in range(config.frames_per_video):
            found = [
                detect(subject, attribute, rng.uniform(threshold, 1.0)),
                detect(obj, attribute, rng.uniform(threshold, 1.0)),
            ]
            for _ in range(config.distractors_per_frame):
                found.append(
                    detect(int(rng.choice(nouns)), int(rng.choice(attributes)), rng.uniform(0.0, threshold))
                )
            order = rng.permutation(len(found))
            per_frame.append(tuple(found[j] for j in order))

        video_id = f"video{i:04d}"
        videos.append(
            VideoRecord(
                video_id=video_id,
                frames=frames,
                entities=tuple(per_frame),
                caption_tokens=(attribute, subject, action, obj, place),
            )
        )
        texts.append(
            TextRecord(
                text_id=f"text{i:04d}",
                video_id=video_id,
                tokens=(subject, action, obj, place),
                actions=((action,),),
                entities=(
                    RoleEntity(tokens=(subject,), role_id=ROLE_AGENT, action_index=0),
                    RoleEntity(tokens=(obj,), role_id=ROLE_PATIENT, action_index=0),
                    RoleEntity(tokens=(place,), role_id=ROLE_LOCATION, action_index=0),
                ),
            )
        )

    split = DatasetSplit(videos=videos, texts=texts)
    validate_split(split, vocab_size=config.vocab_size, num_roles=config.num_roles)
    logger.debug("generated %d synthetic pairs (seed %d, %d scenes available)", len(videos), seed, total)
    return split
