"""Shared fixtures: bundled data paths, fixture backends, corpus generator."""

import random
from pathlib import Path

import pytest

from shopclerk.backends import ScriptedBackend
from shopclerk.vision import FixtureVisionBackend

DATA_DIR = Path(__file__).parent.parent / "src" / "shopclerk" / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def suite_dir(data_dir) -> Path:
    return data_dir / "suite"


@pytest.fixture(scope="session")
def scripts_dir(data_dir) -> Path:
    return data_dir / "scripts"


@pytest.fixture()
def vision_fixtures(data_dir) -> FixtureVisionBackend:
    return FixtureVisionBackend.from_file(data_dir / "vision_fixtures.json")


@pytest.fixture()
def scripted_backend_for(scripts_dir):
    def make(task_id: str) -> ScriptedBackend:
        return ScriptedBackend.from_file(scripts_dir / f"{task_id}.json")

    return make


_WORDS = (
    "please check this item again since the parcel looks late and the strap "
    "broke while the box was wet so refund or exchange would help thanks"
).split()


def url_corpus(seed: int = 7, count: int = 120) -> list[str]:
    """Messages mixing prose with URLs of every kind, duplicates, and short URLs."""
    rng = random.Random(seed)
    pool = []
    for i in range(12):
        pool.append(f"https://img.shop.example/uploads/photo-batch-{i:03d}.jpg")
        pool.append(f"https://shop.example/product/P-{100 + i}/full-spec-sheet")
        pool.append(f"https://shop.example/order/O-{7000 + i}/detail-page")
        pool.append(f"https://media.shop.example/clips/clip-take-{i:03d}.mp4")
        pool.append(f"https://docs.shop.example/guides/setup-guide-{i:03d}.pdf")
    short = [f"https://s.ex/{i}" for i in range(6)]  # below the length threshold
    messages = []
    for _ in range(count):
        words = rng.choices(_WORDS, k=rng.randint(3, 12))
        n_urls = rng.randint(0, 3)
        for _ in range(n_urls):
            url = rng.choice(pool if rng.random() > 0.2 else short)
            words.insert(rng.randrange(len(words) + 1), url)
        messages.append(" ".join(words))
    return messages
