"""Application configuration: file loading, defaults, env overrides.

The config file is YAML (JSON parses too). Unknown keys are a hard error so
typos never silently fall back to defaults. Backend URLs and a few scalar
settings can be overridden through CONSISTENT_* environment variables.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Any, Mapping

import yaml

from .backends import BackendHandle, DecodeConfig, ROLE_GENERATOR, ROLE_INSTRUCT, \
    ROLE_QA_SCORER, ROLE_SPAN_EXTRACTOR
from .codes import CodeSelectionConfig
from .errors import ConfigError
from .pipeline import BackendSet, FilterConfig

BACKEND_KEYS = ("generator", "qa_scorer", "instruct", "span_extractor", "squad_generator")

# config key -> wire role of the handle it produces
_HANDLE_ROLES = {
    "generator": ROLE_GENERATOR,
    "qa_scorer": ROLE_QA_SCORER,
    "instruct": ROLE_INSTRUCT,
    "span_extractor": ROLE_SPAN_EXTRACTOR,
    "squad_generator": ROLE_GENERATOR,
}

ENV_PREFIX = "CONSISTENT"


@dataclass(frozen=True)
class BackendEntry:
    endpoint: str
    timeout_ms: int = 10_000
    max_retries: int = 2
    auth_token: str | None = None


@dataclass(frozen=True)
class BaselineConfig:
    random_pool_k: int = 10
    random_out_vocab: tuple[str, ...] = ()


@dataclass(frozen=True)
class ServiceConfig:
    listen_addr: str = "127.0.0.1:8080"
    store_path: str = "review-store.jsonl"
    auth_token: str | None = None
    ui_dir: str | None = None


@dataclass(frozen=True)
class AppConfig:
    backends: dict = field(default_factory=dict)  # key -> BackendEntry
    filter: FilterConfig = field(default_factory=FilterConfig)
    codes: CodeSelectionConfig = field(default_factory=CodeSelectionConfig)
    decode: DecodeConfig = field(default_factory=DecodeConfig)
    baselines: BaselineConfig = field(default_factory=BaselineConfig)
    service: ServiceConfig = field(default_factory=ServiceConfig)

    def handles(self) -> BackendSet:
        built = {}
        for key, entry in self.backends.items():
            built[key] = BackendHandle(
                role=_HANDLE_ROLES[key],
                endpoint=entry.endpoint,
                timeout_ms=entry.timeout_ms,
                max_retries=entry.max_retries,
                auth_token=entry.auth_token,
            )
        return BackendSet(**built)

    def describe(self) -> dict:
        """Effective config for logging, secrets redacted."""

        def redact(token):
            return "***" if token else None

        return {
            "backends": {
                key: {
                    "endpoint": entry.endpoint,
                    "timeout_ms": entry.timeout_ms,
                    "max_retries": entry.max_retries,
                    "auth_token": redact(entry.auth_token),
                }
                for key, entry in self.backends.items()
            },
            "filter": {
                "kappa": self.filter.kappa,
                "candidates_per_code": self.filter.candidates_per_code,
                "separator": self.filter.separator,
                "accept_tokens": sorted(self.filter.accept_tokens),
            },
            "codes": {
                "max_codes": self.codes.max_codes,
                "top_k_keywords": self.codes.top_k_keywords,
                "top_k_spans": self.codes.top_k_spans,
            },
            "decode": self.decode.to_wire(),
            "service": {
                "listen_addr": self.service.listen_addr,
                "store_path": self.service.store_path,
                "auth_token": redact(self.service.auth_token),
                "ui_dir": self.service.ui_dir,
            },
        }


def _require_mapping(value: Any, context: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{context} must be a mapping, got {type(value).__name__}")
    return value


def _check_keys(data: dict, allowed: tuple[str, ...], context: str) -> None:
    unknown = set(data) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {context}: {', '.join(sorted(unknown))}")


def _build_backends(data: dict) -> dict:
    _check_keys(data, BACKEND_KEYS, "backends")
    entries = {}
    for key, raw in data.items():
        if isinstance(raw, str):
            raw = {"endpoint": raw}
        raw = _require_mapping(raw, f"backends.{key}")
        _check_keys(raw, ("endpoint", "timeout_ms", "max_retries", "auth_token"),
                    f"backends.{key}")
        if "endpoint" not in raw:
            raise ConfigError(f"backends.{key} needs an endpoint")
        entries[key] = BackendEntry(
            endpoint=str(raw["endpoint"]),
            timeout_ms=int(raw.get("timeout_ms", 10_000)),
            max_retries=int(raw.get("max_retries", 2)),
            auth_token=raw.get("auth_token"),
        )
    return entries


def _build_config(data: dict) -> AppConfig:
    _check_keys(data, ("backends", "filter", "codes", "decode", "baselines", "service"),
                "config")
    try:
        filter_raw = _require_mapping(data.get("filter"), "filter")
        _check_keys(filter_raw, ("kappa", "answerability_template", "accept_tokens",
                                 "candidates_per_code", "separator"), "filter")
        if "accept_tokens" in filter_raw:
            filter_raw = dict(filter_raw, accept_tokens=frozenset(
                str(t).casefold() for t in filter_raw["accept_tokens"]))
        filter_cfg = FilterConfig(**{k: v for k, v in filter_raw.items()})

        codes_raw = _require_mapping(data.get("codes"), "codes")
        _check_keys(codes_raw, ("max_codes", "top_k_keywords", "top_k_spans",
                                "max_ngram", "dedup_similarity"), "codes")
        codes_cfg = CodeSelectionConfig(**codes_raw)

        decode_raw = _require_mapping(data.get("decode"), "decode")
        _check_keys(decode_raw, ("strategy", "k", "temperature",
                                 "no_repeat_ngram_size", "seed"), "decode")
        decode_cfg = DecodeConfig(**decode_raw)

        baseline_raw = _require_mapping(data.get("baselines"), "baselines")
        _check_keys(baseline_raw, ("random_pool_k", "random_out_vocab"), "baselines")
        baseline_cfg = BaselineConfig(
            random_pool_k=int(baseline_raw.get("random_pool_k", 10)),
            random_out_vocab=tuple(baseline_raw.get("random_out_vocab", ())),
        )

        service_raw = _require_mapping(data.get("service"), "service")
        _check_keys(service_raw, ("listen_addr", "store_path", "auth_token", "ui_dir"),
                    "service")
        service_cfg = ServiceConfig(**service_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc

    return AppConfig(
        backends=_build_backends(_require_mapping(data.get("backends"), "backends")),
        filter=filter_cfg,
        codes=codes_cfg,
        decode=decode_cfg,
        baselines=baseline_cfg,
        service=service_cfg,
    )


def _apply_env(data: dict, env: Mapping[str, str]) -> dict:
    def set_path(section: str, key: str, value):
        data.setdefault(section, {})
        if data[section] is None:
            data[section] = {}
        data[section][key] = value

    for key in BACKEND_KEYS:
        url = env.get(f"{ENV_PREFIX}_BACKEND_{key.upper()}_URL")
        if url:
            backends = data.setdefault("backends", {}) or {}
            data["backends"] = backends
            existing = backends.get(key)
            if isinstance(existing, dict):
                existing["endpoint"] = url
            else:
                backends[key] = url
    kappa = env.get(f"{ENV_PREFIX}_FILTER_KAPPA")
    if kappa is not None:
        try:
            set_path("filter", "kappa", float(kappa))
        except ValueError as exc:
            raise ConfigError(f"{ENV_PREFIX}_FILTER_KAPPA must be a number") from exc
    seed = env.get(f"{ENV_PREFIX}_DECODE_SEED")
    if seed is not None:
        try:
            set_path("decode", "seed", int(seed))
        except ValueError as exc:
            raise ConfigError(f"{ENV_PREFIX}_DECODE_SEED must be an integer") from exc
    for field_name in ("listen_addr", "store_path", "auth_token", "ui_dir"):
        value = env.get(f"{ENV_PREFIX}_SERVICE_{field_name.upper()}")
        if value is not None:
            set_path("service", field_name, value)
    return data


def load_config(path: str | None = None, env: Mapping[str, str] | None = None) -> AppConfig:
    """Load config from a file (optional) and apply environment overrides."""
    env = os.environ if env is None else env
    data: dict = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                loaded = yaml.safe_load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"config file is not valid YAML: {exc}") from exc
        if loaded is not None and not isinstance(loaded, dict):
            raise ConfigError("config root must be a mapping")
        data = loaded or {}
    data = _apply_env(data, env)
    return _build_config(data)
