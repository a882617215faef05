"""Declarative configuration with file, environment, and flag layers.

Resolution is a pure function: (file mapping, env mapping, flag mapping)
-> PipelineConfig, with precedence flags > env > file > defaults.  The
reproducibility-relevant subset is exposed as ``snapshot()`` and recorded
into every manifest a run produces.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .augment import AugmentConfig
from .errors import ConfigError
from .pipeline.reasoning import NONE_SENTINEL_PATTERN
from .render import RenderConfig

_ENV_KEYS = (
    "TEX_BIN",
    "PDF2PNG_BIN",
    "RENDER_DPI",
    "RENDER_TIMEOUT_S",
    "RENDER_JOBS",
    "SCORER_CMD",
    "SCORER_ADDR",
    "SCORER_TIMEOUT_S",
)


@dataclass
class PipelineConfig:
    tau: float = 0.8
    max_iterations: int = 4
    judge_threshold: float = 8.0
    max_fraction: float = 0.4
    variants_per_sample: int = 2
    seed: int = 0
    jobs: int = 0
    work_dir: str = "runs/default"
    none_sentinel: str = NONE_SENTINEL_PATTERN
    scorer_cmd: str | None = None
    scorer_addr: str | None = None
    scorer_timeout_s: float = 30.0
    render: RenderConfig = field(default_factory=RenderConfig)
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    clients: dict = field(default_factory=dict)  # role -> {"endpoint": ...}

    def snapshot(self) -> dict:
        """Reproducibility-relevant knobs; no paths, no host specifics."""
        return {
            "tau": self.tau,
            "max_iterations": self.max_iterations,
            "judge_threshold": self.judge_threshold,
            "max_fraction": self.max_fraction,
            "variants_per_sample": self.variants_per_sample,
            "seed": self.seed,
            "render_dpi": self.render.dpi,
            "clients": {role: spec.get("model", spec.get("endpoint", "mock")) for role, spec in self.clients.items()},
        }


def load_config_file(path: str | Path | None) -> dict:
    if path is None:
        return {}
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    return data


def resolve_config(
    file_data: dict | None = None,
    env: dict | None = None,
    flags: dict | None = None,
) -> PipelineConfig:
    """Merge the three layers into a concrete config."""
    file_data = dict(file_data or {})
    env = {k: v for k, v in (env if env is not None else os.environ).items() if k in _ENV_KEYS}
    flags = {k: v for k, v in (flags or {}).items() if v is not None}

    merged = dict(file_data)
    render_cfg = dict(merged.pop("render", {}) or {})
    augment_cfg = dict(merged.pop("augment", {}) or {})

    if env.get("RENDER_DPI"):
        render_cfg["dpi"] = int(env["RENDER_DPI"])
    if env.get("RENDER_TIMEOUT_S"):
        render_cfg["timeout_s"] = float(env["RENDER_TIMEOUT_S"])
    if env.get("RENDER_JOBS"):
        render_cfg["jobs"] = int(env["RENDER_JOBS"])
    if env.get("TEX_BIN"):
        import shlex

        render_cfg["tex_cmd"] = tuple(shlex.split(env["TEX_BIN"]))
    if env.get("PDF2PNG_BIN"):
        import shlex

        render_cfg["pdf2png_cmd"] = tuple(shlex.split(env["PDF2PNG_BIN"]))
    if env.get("SCORER_CMD"):
        merged["scorer_cmd"] = env["SCORER_CMD"]
    if env.get("SCORER_ADDR"):
        merged["scorer_addr"] = env["SCORER_ADDR"]
    if env.get("SCORER_TIMEOUT_S"):
        merged["scorer_timeout_s"] = float(env["SCORER_TIMEOUT_S"])

    for key in ("jobs", "seed", "tau", "work_dir", "max_iterations", "variants_per_sample"):
        if key in flags:
            merged[key] = flags[key]
    if "jobs" in flags:
        render_cfg["jobs"] = flags["jobs"]
    for key in ("dpi", "timeout_s", "keep_artifacts"):
        if key in flags:
            render_cfg[key] = flags[key]

    known = set(PipelineConfig.__dataclass_fields__)
    unknown = set(merged) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("tex_cmd", "pdf2png_cmd", "languages"):
        if isinstance(render_cfg.get(key), list):
            render_cfg[key] = tuple(render_cfg[key])
    try:
        render = RenderConfig(**render_cfg)
        augment = AugmentConfig.from_mapping(augment_cfg)
        return PipelineConfig(**merged, render=render, augment=augment)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
