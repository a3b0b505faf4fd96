"""Service configuration: JSON file plus DATAPLORE_* environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from dataplore.dataset import fixture_path

ENV_PREFIX = "DATAPLORE_"


@dataclass
class ServiceConfig:
    port: int = 8000
    datasets: dict[str, str] = field(default_factory=dict)
    engine_url: Optional[str] = None
    novelty_default: float = 0.2
    in_list_cap: int = 10_000
    persist_dir: Optional[str] = None
    ui_dir: Optional[str] = None
    model_path: Optional[str] = None

    def __post_init__(self):
        self.datasets.setdefault("fixture", str(fixture_path()))

    @classmethod
    def load(cls, path: Optional[str | Path] = None, env: Optional[dict] = None) -> "ServiceConfig":
        doc = {}
        if path is not None:
            doc = json.loads(Path(path).read_text("utf-8"))
        env = os.environ if env is None else env

        def override(key: str, cast):
            raw = env.get(ENV_PREFIX + key.upper())
            if raw is not None:
                doc[key] = cast(raw)

        override("port", int)
        override("engine_url", str)
        override("novelty_default", float)
        override("in_list_cap", int)
        override("persist_dir", str)
        override("ui_dir", str)
        override("model_path", str)
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in doc.items() if k in known})
