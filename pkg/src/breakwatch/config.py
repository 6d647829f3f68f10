"""Tool configuration: defaults, file loading, and CLI override precedence.

Config files are flat TOML-style `key = value` lines; `#` starts a comment.
CLI flags always win over file values, which win over the defaults here.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from pathlib import Path

from .treediff import EDIT_THRESHOLD


@dataclass(frozen=True)
class Config:
    segmentation_rounds: int = 6
    salient_threshold: float = 0.5
    edit_threshold: float = EDIT_THRESHOLD
    heuristic: str = "k1"
    strict_comparison: bool = False
    saliency_model_path: str | None = None
    breakage_model_path: str | None = None
    parallelism: int = 4
    seed: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


_BOOL = {"true": True, "false": False, "1": True, "0": False}


def _coerce(current, raw: str):
    if isinstance(current, bool):
        try:
            return _BOOL[raw.lower()]
        except KeyError:
            raise ValueError(f"expected a boolean, got {raw!r}")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    return raw.strip("\"'")


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> Config:
    """Defaults, then file values, then explicit overrides."""
    cfg = Config()
    if path is not None:
        values = {}
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line or line.startswith("["):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, raw = (part.strip() for part in line.split("=", 1))
            if not hasattr(cfg, key):
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = _coerce(getattr(cfg, key), raw)
        cfg = replace(cfg, **values)
    if overrides:
        cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    if not 0 < cfg.salient_threshold < 1:
        raise ValueError("salient_threshold must be in (0, 1)")
    if not 0 < cfg.edit_threshold <= 1:
        raise ValueError("edit_threshold must be in (0, 1]")
    if cfg.segmentation_rounds < 1:
        raise ValueError("segmentation_rounds must be >= 1")
    return cfg
