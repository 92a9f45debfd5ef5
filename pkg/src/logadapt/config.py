"""Run configuration: documented defaults, config file, flag overrides.

The config file is plain text with flat dotted keys:

    # comment
    meta.inner_lr = 0.05
    model.window_size = 100

Precedence is command-line flags > config file > defaults. Every key has
a default below; unknown keys are rejected so typos cannot silently fall
back to defaults.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

from .errors import ConfigError
from .meta import MetaConfig

# key: (default, type). Types: int, float, str, bool.
DEFAULTS: dict[str, tuple[Any, type]] = {
    "seed": (7, int),
    "represent.provider": ("hash", str),  # "hash" or "table:<path>"
    "represent.dim": (768, int),
    "represent.seed": (-1, int),  # -1: derive from the root seed
    "represent.table_fallback": (False, bool),
    "model.hidden_dim": (128, int),
    "model.window_size": (100, int),
    "model.threshold": (0.5, float),
    "meta.inner_lr": (0.01, float),
    "meta.meta_lr": (0.001, float),
    "meta.inner_steps": (5, int),
    "meta.finetune_steps": (5, int),
    "meta.meta_epochs": (30, int),
    "meta.outer_optimizer": ("adamw", str),
    "meta.finetune_optimizer": ("sgd", str),
    "meta.class_weighting": ("balanced", str),
    "meta.weight_decay": (0.01, float),
    "meta.adam_beta1": (0.9, float),
    "meta.adam_beta2": (0.999, float),
    "meta.adam_eps": (1e-8, float),
    "sample.max_attempts": (10_000, int),
    "sample.tasks": (20, int),
    "sample.profile": ("", str),  # "", "source", "tbird", "spirit"
    # Preset overrides; negative values mean "keep the preset's value".
    "sample.support_length": (-1, int),
    "sample.support_min": (-1.0, float),
    "sample.support_max": (-1.0, float),
    "sample.query_length": (-1, int),
    "sample.query_min": (-1.0, float),
    "sample.query_max": (-1.0, float),
    "synth.source_events": (60_000, int),
    "synth.target_events": (400_000, int),
    "synth.template_noise": (0.05, float),
}


def _parse_value(raw: str, kind: type, key: str) -> Any:
    raw = raw.strip()
    try:
        if kind is bool:
            lowered = raw.lower()
            if lowered in ("true", "1", "yes", "on"):
                return True
            if lowered in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        return kind(raw)
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot parse {raw!r} as {kind.__name__}") from None


def parse_config_file(path: str | Path) -> dict[str, Any]:
    """Parse ``key = value`` lines; '#' starts a comment."""
    values: dict[str, Any] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {stripped!r}")
            key, raw = (part.strip() for part in stripped.split("=", 1))
            if key not in DEFAULTS:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = _parse_value(raw, DEFAULTS[key][1], key)
    return values


class RunConfig:
    """Merged configuration with typed access by dotted key."""

    def __init__(self, values: dict[str, Any]):
        self._values = values

    @classmethod
    def load(
        cls,
        config_path: str | Path | None = None,
        overrides: dict[str, Any] | None = None,
    ) -> "RunConfig":
        values = {key: default for key, (default, _) in DEFAULTS.items()}
        if config_path is not None:
            if not Path(config_path).exists():
                raise ConfigError(f"config file {config_path} does not exist")
            values.update(parse_config_file(config_path))
        for key, value in (overrides or {}).items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key {key!r}")
            if value is not None:
                kind = DEFAULTS[key][1]
                values[key] = _parse_value(str(value), kind, key) if not isinstance(value, kind) else value
        config = cls(values)
        config.validate()
        return config

    def __getitem__(self, key: str) -> Any:
        return self._values[key]

    def as_dict(self) -> dict[str, Any]:
        return dict(self._values)

    def validate(self) -> None:
        if self["represent.dim"] < 1:
            raise ConfigError("represent.dim must be >= 1")
        if self["model.hidden_dim"] < 1:
            raise ConfigError("model.hidden_dim must be >= 1")
        if self["model.window_size"] < 1:
            raise ConfigError("model.window_size must be >= 1")
        if not 0.0 < self["model.threshold"] < 1.0:
            raise ConfigError("model.threshold must be in (0, 1)")
        provider = self["represent.provider"]
        if provider != "hash" and not provider.startswith("table:"):
            raise ConfigError(
                f"represent.provider must be 'hash' or 'table:<path>', got {provider!r}"
            )
        try:
            self.meta_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def spec_overrides(self) -> dict:
        """Preset-field overrides from the sample.* keys (negatives skipped)."""
        overrides = {}
        for field in ("support_length", "support_min", "support_max",
                      "query_length", "query_min", "query_max"):
            value = self[f"sample.{field}"]
            if value >= 0:
                overrides[field] = value
        return overrides

    def representation_seed(self) -> int:
        from .seeds import substream_seed

        configured = self["represent.seed"]
        if configured >= 0:
            return configured
        return substream_seed(self["seed"], "represent")

    def meta_config(self) -> MetaConfig:
        return MetaConfig(
            inner_lr=self["meta.inner_lr"],
            meta_lr=self["meta.meta_lr"],
            inner_steps=self["meta.inner_steps"],
            meta_epochs=self["meta.meta_epochs"],
            window_size=self["model.window_size"],
            seed=self["seed"],
            class_weighting=self["meta.class_weighting"],
            outer_optimizer=self["meta.outer_optimizer"],
            finetune_steps=self["meta.finetune_steps"],
            finetune_optimizer=self["meta.finetune_optimizer"],
            threshold=self["model.threshold"],
            adam_betas=(self["meta.adam_beta1"], self["meta.adam_beta2"]),
            adam_eps=self["meta.adam_eps"],
            weight_decay=self["meta.weight_decay"],
        )
