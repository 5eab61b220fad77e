import time
from dataclasses import dataclass
from pathlib import Path

import pytest

from tagtriad import config as C
from tagtriad.pipelines import PRETRAINED, BertPipeline, carve_validation, load_splits, pretrain, save_model


@dataclass
class Pretrained:
    pipeline: BertPipeline
    path: Path
    seconds: float


@pytest.fixture(scope="session")
def desk_pretrained(tmp_path_factory) -> Pretrained:
    """Desk-profile masked-LM pretraining, run once and shared by every test that needs an encoder."""
    cfg = C.resolve("desk", flags={"pipeline": "bert"})
    train, _ = load_splits(cfg)
    fit, _ = carve_validation(train, cfg)
    t0 = time.perf_counter()
    pre = pretrain(cfg, fit)
    seconds = time.perf_counter() - t0
    path = save_model(pre, tmp_path_factory.mktemp("pretrained"), PRETRAINED)
    return Pretrained(pre, path, seconds)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion; lines are echoed in the terminal summary."""
    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
