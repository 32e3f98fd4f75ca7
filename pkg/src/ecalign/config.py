"""Pipeline configuration: a single JSON key-value file.

See the README for the documented schema; :func:`load_config` fills in
defaults and :meth:`PipelineConfig.validate` checks paths and parameter
ranges before anything runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .ingest import SampleFilterConfig


@dataclass
class Tolerances:
    gradient: float = 1e-7
    eigen_residual: float = 1e-12
    eigen_gap: float = 1e-10
    max_iter: int = 100


@dataclass
class PipelineConfig:
    trade_path: Path
    indicators_path: Path
    income_groups_path: Path
    product_categories_path: Path
    out_dir: Path
    filters: SampleFilterConfig = field(default_factory=SampleFilterConfig)
    schema: dict[str, str] = field(default_factory=dict)
    k: int = 50
    m: int = 3
    epsilon: float = 1e-6
    analysis_year: int = 2022
    seed: int = 20240
    stages: list[str] | None = None
    tolerances: Tolerances = field(default_factory=Tolerances)

    def validate(self) -> None:
        for label, path in (
            ("trade", self.trade_path),
            ("indicators", self.indicators_path),
            ("income_groups", self.income_groups_path),
            ("product_categories", self.product_categories_path),
        ):
            if not Path(path).exists():
                raise ValueError(f"{label} input does not exist: {path}")
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        bad = set(self.schema) - {"year", "exporter", "product", "value"}
        if bad:
            raise ValueError(f"unknown schema keys: {sorted(bad)}")


def load_config(path: Path | str, out_override: Path | str | None = None,
                seed_override: int | None = None) -> PipelineConfig:
    path = Path(path)
    if not path.exists():
        raise ValueError(f"config file not found: {path}")
    raw = json.loads(path.read_text(encoding="utf-8"))

    inputs = raw.get("inputs", {})
    missing = [k for k in ("trade", "indicators", "income_groups", "product_categories")
               if k not in inputs]
    if missing:
        raise ValueError(f"config inputs section lacks {missing}")

    def respath(p):
        p = Path(p)
        return p if p.is_absolute() else (path.parent / p)

    filters = SampleFilterConfig(**raw.get("filters", {}))
    tol = Tolerances(**raw.get("tolerances", {}))
    out_dir = Path(out_override) if out_override else respath(raw.get("out_dir", "artifacts"))

    cfg = PipelineConfig(
        trade_path=respath(inputs["trade"]),
        indicators_path=respath(inputs["indicators"]),
        income_groups_path=respath(inputs["income_groups"]),
        product_categories_path=respath(inputs["product_categories"]),
        out_dir=out_dir,
        filters=filters,
        schema=raw.get("schema", {}),
        k=int(raw.get("k", 50)),
        m=int(raw.get("m", 3)),
        epsilon=float(raw.get("epsilon", 1e-6)),
        analysis_year=int(raw.get("analysis_year", 2022)),
        seed=int(seed_override if seed_override is not None else raw.get("seed", 20240)),
        stages=raw.get("stages"),
        tolerances=tol,
    )
    return cfg
