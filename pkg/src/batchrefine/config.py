"""Run configuration: one strict JSON document collecting every knob.

Unknown keys are rejected (silent typos corrupt sweeps), referenced files
must exist at load time, and fixed coefficients are validated immediately.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from .core import ExtractionRule
from .errors import ConfigError
from .fusion import Coefficients, ScalingFactors
from .scoring import DistanceMetric, LengthPenaltyConfig, UncertaintyConfig

CONFIG_VERSION = 1
AUTO = "auto"
CACHE_ENV_VAR = "REFINE_CACHE_DIR"

METRIC_CHOICES = (AUTO, "hit_rate", "rouge1", "rouge2", "rougeL")


@dataclass(frozen=True)
class FileBackend:
    path: Path


@dataclass(frozen=True)
class HttpBackend:
    base_url: str
    timeout: float = 30.0
    max_batch: int = 64


@dataclass(frozen=True)
class RunConfig:
    candidates: Path
    output_dir: Path
    embeddings: FileBackend | HttpBackend
    nli: FileBackend | HttpBackend
    references: Path | None = None
    metric: str = AUTO
    stability_metric: DistanceMetric = DistanceMetric.EUCLIDEAN
    k_max: int = 5
    length_penalty: LengthPenaltyConfig = LengthPenaltyConfig()
    uncertainty: UncertaintyConfig = UncertaintyConfig()
    coefficients: Coefficients | None = None  # None means "tune"
    scaling: ScalingFactors | None = None  # None means "fit"
    grid_step: float = 0.1
    extraction: ExtractionRule | str = AUTO
    normalize_answers: bool = True
    strict_determinism: bool = True

    def cache_dir(self) -> Path:
        override = os.environ.get(CACHE_ENV_VAR)
        return Path(override) if override else self.output_dir / "cache"

    def artifact(self, name: str) -> Path:
        return self.output_dir / name


class _Section:
    """Dict wrapper that tracks consumed keys and rejects leftovers."""

    def __init__(self, data: dict, where: str):
        if not isinstance(data, dict):
            raise ConfigError(f"{where} must be a JSON object")
        self._data = dict(data)
        self._where = where

    def take(self, key, default=None, required=False):
        if key in self._data:
            return self._data.pop(key)
        if required:
            raise ConfigError(f"{self._where}: missing required key {key!r}")
        return default

    def finish(self):
        if self._data:
            unknown = ", ".join(sorted(self._data))
            raise ConfigError(f"{self._where}: unknown keys: {unknown}")


def _existing_path(base: Path, value, where: str) -> Path:
    if not isinstance(value, str) or not value:
        raise ConfigError(f"{where} must be a non-empty path string")
    path = (base / value).resolve() if not Path(value).is_absolute() else Path(value)
    if not path.exists():
        raise ConfigError(f"{where}: file not found: {path}")
    return path


def _backend(base: Path, value, where: str) -> FileBackend | HttpBackend:
    section = _Section(value, where)
    file_value = section.take("file")
    http_value = section.take("http")
    section.finish()
    if (file_value is None) == (http_value is None):
        raise ConfigError(f"{where} must specify exactly one of 'file' or 'http'")
    if file_value is not None:
        return FileBackend(path=_existing_path(base, file_value, f"{where}.file"))
    http = _Section(http_value, f"{where}.http")
    backend = HttpBackend(
        base_url=str(http.take("base_url", required=True)),
        timeout=float(http.take("timeout", 30.0)),
        max_batch=int(http.take("max_batch", 64)),
    )
    http.finish()
    if backend.max_batch < 1:
        raise ConfigError(f"{where}.http.max_batch must be >= 1")
    return backend


def _extraction(value) -> ExtractionRule | str:
    if value == AUTO:
        return AUTO
    if value == "whole_text":
        return ExtractionRule.whole_text()
    if isinstance(value, dict):
        section = _Section(value, "extraction")
        rule = section.take("rule", "prefix_marker")
        marker = section.take("marker")
        section.finish()
        if rule == "whole_text":
            return ExtractionRule.whole_text()
        if rule == "prefix_marker":
            if not marker:
                raise ConfigError("extraction.marker required for prefix_marker")
            return ExtractionRule.prefix_marker(str(marker))
        raise ConfigError(f"unknown extraction rule {rule!r}")
    raise ConfigError(f"extraction must be 'auto', 'whole_text' or an object, got {value!r}")


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc

    base = path.resolve().parent
    section = _Section(raw, str(path))
    version = section.take("version", required=True)
    if version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {version!r} (expected {CONFIG_VERSION})")

    candidates = _existing_path(base, section.take("candidates", required=True), "candidates")
    references_value = section.take("references")
    references = (
        _existing_path(base, references_value, "references")
        if references_value is not None
        else None
    )
    output_value = section.take("output_dir", required=True)
    output_dir = (
        (base / output_value) if not Path(output_value).is_absolute() else Path(output_value)
    )

    embeddings = _backend(base, section.take("embeddings", required=True), "embeddings")
    nli = _backend(base, section.take("nli", required=True), "nli")

    metric = section.take("metric", AUTO)
    if metric not in METRIC_CHOICES:
        raise ConfigError(f"metric must be one of {METRIC_CHOICES}, got {metric!r}")

    try:
        stability_metric = DistanceMetric(section.take("distance_metric", "euclidean"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    try:
        k_max = int(section.take("k_max", 5))
        if k_max < 1:
            raise ConfigError("k_max must be >= 1")

        lp_section = _Section(section.take("length_penalty", {}), "length_penalty")
        length_penalty = LengthPenaltyConfig(
            q=float(lp_section.take("q", 0.0)), p=float(lp_section.take("p", 2.0))
        )
        lp_section.finish()

        unc_section = _Section(section.take("uncertainty", {}), "uncertainty")
        uncertainty = UncertaintyConfig(
            neighborhood_size=int(unc_section.take("neighborhood_size", 5)),
            batch_limit=int(unc_section.take("batch_limit", 1000)),
        )
        unc_section.finish()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    coefficients_value = section.take("coefficients", "tune")
    if coefficients_value == "tune":
        coefficients = None
    elif isinstance(coefficients_value, dict):
        coef_section = _Section(coefficients_value, "coefficients")
        coefficients = Coefficients(
            alpha=float(coef_section.take("alpha", required=True)),
            beta=float(coef_section.take("beta", required=True)),
            gamma=float(coef_section.take("gamma", required=True)),
        )
        coef_section.finish()
    else:
        raise ConfigError("coefficients must be 'tune' or an {alpha, beta, gamma} object")

    scaling_value = section.take("scaling", "fit")
    if scaling_value == "fit":
        scaling = None
    elif isinstance(scaling_value, dict):
        scale_section = _Section(scaling_value, "scaling")
        try:
            scaling = ScalingFactors(
                u_sta=float(scale_section.take("u_sta", required=True)),
                u_ent=float(scale_section.take("u_ent", required=True)),
                u_unc=float(scale_section.take("u_unc", required=True)),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        scale_section.finish()
    else:
        raise ConfigError("scaling must be 'fit' or a {u_sta, u_ent, u_unc} object")

    grid_step = float(section.take("grid_step", 0.1))
    extraction = _extraction(section.take("extraction", AUTO))
    normalize_answers = bool(section.take("normalize_answers", True))
    strict_determinism = bool(section.take("strict_determinism", True))
    section.finish()

    return RunConfig(
        candidates=candidates,
        references=references,
        output_dir=output_dir,
        embeddings=embeddings,
        nli=nli,
        metric=metric,
        stability_metric=stability_metric,
        k_max=k_max,
        length_penalty=length_penalty,
        uncertainty=uncertainty,
        coefficients=coefficients,
        scaling=scaling,
        grid_step=grid_step,
        extraction=extraction,
        normalize_answers=normalize_answers,
        strict_determinism=strict_determinism,
    )
