import hashlib

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib
from contextvars import ContextVar
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Type

import orjson
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
    TomlConfigSettingsSource,
)

from .errors import ConfigError

ENV_PREFIX = "GRAMMAR_INDUCTION_"

# toml file picked up by the settings source chain for the current load
_CONFIG_FILE: ContextVar[Optional[Path]] = ContextVar("config_file", default=None)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DimsConfig(_Section):
    m_lex: int = Field(16, gt=0)
    m_node: int = Field(32, gt=0)
    m_interp: int = Field(32, gt=0)
    m_type: int = Field(32, gt=0)
    # attention width; None means the input width
    m_attention: Optional[int] = Field(None, gt=0)

    @model_validator(mode="after")
    def _shared_type_space(self) -> "DimsConfig":
        # identity decoding is shared between type embeddings and interpretations
        if self.m_type != self.m_interp:
            raise ValueError("m_type must equal m_interp")
        return self


class ParserConfig(_Section):
    lr: float = Field(5e-3, gt=0)
    epochs: int = Field(20, gt=0)
    batch_size: int = Field(32, gt=0)


class TypesConfig(_Section):
    lr: float = Field(3e-3, gt=0)
    epochs: int = Field(20, gt=0)
    batch_size: int = Field(64, gt=0)
    samples: int = Field(1024, gt=0)
    recurse_prob: float = Field(0.4, ge=0, lt=1)
    max_depth: int = Field(3, ge=0)
    freeze_encoder: bool = True


class InterpreterConfig(_Section):
    lr: float = Field(3e-3, gt=0)
    epochs: int = Field(20, gt=0)
    batch_size: int = Field(32, gt=0)
    gamma: float = Field(1.0, gt=0)
    threshold: float = Field(90.0, ge=0, le=100)
    freeze_upstream: bool = True
    divergence: Literal["cross_entropy", "kl"] = "cross_entropy"


class EvalConfig(_Section):
    k: int = Field(5, ge=2)
    bootstrap: int = Field(1000, gt=0)


class TrainConfig(BaseSettings):
    """every knob of the three training stages and evaluation"""

    model_config = SettingsConfigDict(
        env_prefix=ENV_PREFIX,
        env_nested_delimiter="__",
        extra="forbid",
    )

    seed: int = Field(7, ge=0)
    decoder_depth: int = Field(4, gt=0)
    # mlp: WRAP/CONSTRUCT encoder and FACTOR decoders; lstm: stacked tree lstm encoder, lstm decoders
    type_cell: Literal["mlp", "lstm"] = "mlp"
    encoder_layers: int = Field(2, gt=0)
    dtype: Literal["float64", "float32"] = "float64"
    primitives: List[str] = Field(default_factory=lambda: ["e", "s", "t"])
    anchors_file: Optional[Path] = None
    debug: bool = False
    log_level: str = "INFO"

    dims: DimsConfig = Field(default_factory=DimsConfig)
    parser: ParserConfig = Field(default_factory=ParserConfig)
    types: TypesConfig = Field(default_factory=TypesConfig)
    interpreter: InterpreterConfig = Field(default_factory=InterpreterConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)

    @field_validator("primitives")
    @classmethod
    def _distinct_primitives(cls, value: List[str]) -> List[str]:
        if not value or len(set(value)) != len(value):
            raise ValueError("primitives must be a nonempty list of distinct names")
        return value

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        # precedence: --set overrides > environment > toml file > defaults
        sources: List[PydanticBaseSettingsSource] = [init_settings, env_settings, dotenv_settings]
        config_file = _CONFIG_FILE.get()
        if config_file is not None:
            sources.append(TomlConfigSettingsSource(settings_cls, toml_file=config_file))
        return tuple(sources)

    def snapshot(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")

    def fingerprint(self) -> str:
        blob = orjson.dumps(self.snapshot(), option=orjson.OPT_SORT_KEYS)
        return hashlib.sha256(blob).hexdigest()[:16]

    def save_to_file(self, path: Path) -> None:
        path.write_bytes(orjson.dumps(self.snapshot(), option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS))


def parse_override(item: str) -> Dict[str, Any]:
    """turn "a.b=c" into {"a": {"b": c}}, reading c as a toml value when possible"""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, raw = item.split("=", 1)
    key = key.strip()
    if not key or any(not part for part in key.split(".")):
        raise ConfigError(f"override {item!r} has an empty key")
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()

    nested: Dict[str, Any] = {}
    cursor = nested
    parts = key.split(".")
    for part in parts[:-1]:
        cursor = cursor.setdefault(part, {})
    cursor[parts[-1]] = value
    return nested


def _deep_merge(base: Dict[str, Any], extra: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(config_path: Optional[Path] = None, overrides: Optional[List[str]] = None) -> TrainConfig:
    if config_path is not None and not Path(config_path).is_file():
        raise ConfigError(f"config file not found: {config_path}")

    init: Dict[str, Any] = {}
    for item in overrides or []:
        init = _deep_merge(init, parse_override(item))

    token = _CONFIG_FILE.set(Path(config_path) if config_path is not None else None)
    try:
        return TrainConfig(**init)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"invalid configuration: {problems}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"failed to parse {config_path}: {e}") from e
    finally:
        _CONFIG_FILE.reset(token)
