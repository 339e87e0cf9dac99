from hise.data.fixtures import TEXTS_FILE, VIDEOS_FILE, load_fixture_dir, load_fixtures, write_fixtures
from hise.data.records import DatasetSplit, EntityDetection, RoleEntity, TextRecord, VideoRecord
from hise.data.synthetic import generate_synthetic

__all__ = [
    "TEXTS_FILE",
    "VIDEOS_FILE",
    "DatasetSplit",
    "EntityDetection",
    "RoleEntity",
    "TextRecord",
    "VideoRecord",
    "generate_synthetic",
    "load_fixture_dir",
    "load_fixtures",
    "write_fixtures",
]
