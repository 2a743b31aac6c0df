"""Run configuration: flat key-value text with section prefixes.

Example::

    run.manifest = corpus/manifest.tsv
    run.out = out
    run.seed = 7

    feature.boaw-60 = boaw clip_db=-60 n=2000 assignments=10
    feature.text-gold = text source=gold
    feature.embed = file path=features/external.tsv

    svm.c_grid = 0.03125 0.125 0.5 2.0 8.0 32.0
    wer.sources = asr:main
    sweep.rates = 0.0 0.1 0.2 0.3 0.4 0.5
    fusion.groups = audio gs-text asr-text all

Unknown keys are rejected so typos fail loudly. The canonical serialization
(sorted keys, repr'd numbers) feeds the config hash that names cache
directories and is stamped into run logs.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

DEFAULT_C_GRID = (0.03125, 0.125, 0.5, 2.0, 8.0, 32.0)
RECIPE_KINDS = ("boaw", "text", "file")

_RECIPE_OPTIONS = {
    "boaw": {"clip_db", "n", "assignments", "mel"},
    "text": {"source", "hash_dim", "ngram_max"},
    "file": {"path"},
}


@dataclass(frozen=True)
class FeatureRecipe:
    name: str
    kind: str
    options: tuple[tuple[str, str], ...]  # sorted (key, value) pairs

    def __post_init__(self):
        if self.kind not in RECIPE_KINDS:
            raise ConfigError(f"feature {self.name!r}: unknown kind {self.kind!r}")
        allowed = _RECIPE_OPTIONS[self.kind]
        for key, _ in self.options:
            if key not in allowed:
                raise ConfigError(f"feature {self.name!r}: unknown option {key!r} for kind {self.kind!r}")
        if self.kind == "file" and "path" not in dict(self.options):
            raise ConfigError(f"feature {self.name!r}: file recipe needs path=")
        if self.kind == "text" and "source" not in dict(self.options):
            raise ConfigError(f"feature {self.name!r}: text recipe needs source=")

    def opt(self, key: str, default: str | None = None) -> str | None:
        return dict(self.options).get(key, default)


@dataclass(frozen=True)
class RunConfig:
    manifest: Path
    out: Path
    seed: int = 0
    sample_rate: int = 16000
    features: tuple[FeatureRecipe, ...] = ()
    c_grid: tuple[float, ...] = DEFAULT_C_GRID
    svm_tol: float = 1e-4
    svm_max_epochs: int = 1000
    wer_sources: tuple[str, ...] = ()
    sweep_rates: tuple[float, ...] = ()
    sweep_mix: tuple[float, float, float] = (0.6, 0.2, 0.2)
    fusion_groups: tuple[str, ...] = ()
    fusion_min_size: int = 3

    def __post_init__(self):
        if self.seed < 0:
            raise ConfigError("run.seed must be non-negative")
        if self.sample_rate <= 0:
            raise ConfigError("run.sample_rate must be positive")
        if not self.c_grid or any(c <= 0 for c in self.c_grid):
            raise ConfigError("svm.c_grid must be positive values")
        for rate in self.sweep_rates:
            if not 0.0 <= rate < 1.0:
                raise ConfigError(f"sweep rate {rate} outside [0, 1)")
        if abs(sum(self.sweep_mix) - 1.0) > 1e-9:
            raise ConfigError("sweep.mix must sum to 1")
        if self.fusion_min_size < 1:
            raise ConfigError("fusion.min_size must be >= 1")
        names = [r.name for r in self.features]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate feature names in config")

    def validate_paths(self) -> None:
        """Existence checks, deferred so synthetic configs can be built first."""
        if not self.manifest.is_file():
            raise ConfigError(f"manifest not found: {self.manifest}")
        for recipe in self.features:
            if recipe.kind == "file":
                path = Path(recipe.opt("path"))
                if not path.is_file():
                    raise ConfigError(f"feature {recipe.name!r}: file not found: {path}")

    def recipe(self, name: str) -> FeatureRecipe:
        for r in self.features:
            if r.name == name:
                return r
        raise ConfigError(f"no feature named {name!r} in config")

    def canonical(self) -> str:
        # run.out is deliberately absent: the hash identifies the computation,
        # and the same run written to two directories must collide.
        lines = [
            f"run.manifest = {self.manifest}",
            f"run.seed = {self.seed}",
            f"run.sample_rate = {self.sample_rate}",
            f"svm.c_grid = {' '.join(repr(c) for c in self.c_grid)}",
            f"svm.tol = {repr(self.svm_tol)}",
            f"svm.max_epochs = {self.svm_max_epochs}",
            f"wer.sources = {' '.join(self.wer_sources)}",
            f"sweep.rates = {' '.join(repr(r) for r in self.sweep_rates)}",
            f"sweep.mix = {' '.join(repr(m) for m in self.sweep_mix)}",
            f"fusion.groups = {' '.join(self.fusion_groups)}",
            f"fusion.min_size = {self.fusion_min_size}",
        ]
        for recipe in self.features:
            opts = " ".join(f"{k}={v}" for k, v in recipe.options)
            lines.append(f"feature.{recipe.name} = {recipe.kind} {opts}".rstrip())
        return "\n".join(sorted(lines)) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()[:12]


def parse_config(text: str, base_dir: Path | None = None) -> RunConfig:
    """Parse config text; relative paths resolve against base_dir if given."""
    base = base_dir if base_dir is not None else Path(".")
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if "." not in key:
            raise ConfigError(f"line {lineno}: key {key!r} lacks a section prefix")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value

    def take(key: str, default: str | None = None) -> str | None:
        return raw.pop(key, default)

    manifest_value = take("run.manifest")
    if manifest_value is None:
        raise ConfigError("config missing run.manifest")
    out_value = take("run.out", "out")

    features = []
    for key in sorted(k for k in raw if k.startswith("feature.")):
        name = key[len("feature."):]
        if not name:
            raise ConfigError("feature key with empty name")
        parts = raw.pop(key).split()
        if not parts:
            raise ConfigError(f"feature {name!r}: empty declaration")
        kind, opt_parts = parts[0], parts[1:]
        options = []
        for part in opt_parts:
            if "=" not in part:
                raise ConfigError(f"feature {name!r}: bad option {part!r}, expected key=value")
            okey, _, ovalue = part.partition("=")
            options.append((okey, ovalue))
        features.append(FeatureRecipe(name=name, kind=kind, options=tuple(sorted(options))))

    try:
        config = RunConfig(
            manifest=_resolve(base, manifest_value),
            out=_resolve(base, out_value),
            seed=int(take("run.seed", "0")),
            sample_rate=int(take("run.sample_rate", "16000")),
            features=tuple(features),
            c_grid=_floats(take("svm.c_grid", " ".join(repr(c) for c in DEFAULT_C_GRID))),
            svm_tol=float(take("svm.tol", "1e-4")),
            svm_max_epochs=int(take("svm.max_epochs", "1000")),
            wer_sources=tuple(take("wer.sources", "").split()),
            sweep_rates=_floats(take("sweep.rates", "")),
            sweep_mix=_mix(take("sweep.mix", "0.6 0.2 0.2")),
            fusion_groups=tuple(take("fusion.groups", "").split()),
            fusion_min_size=int(take("fusion.min_size", "3")),
        )
    except ValueError as exc:
        raise ConfigError(f"bad numeric value in config: {exc}") from exc
    if raw:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(raw))}")
    return config


def load_config(path: Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, base_dir=Path(path).parent)


def _resolve(base: Path, value: str) -> Path:
    path = Path(value)
    return path if path.is_absolute() else base / path


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split())


def _mix(text: str) -> tuple[float, float, float]:
    values = _floats(text)
    if len(values) != 3:
        raise ConfigError("sweep.mix needs exactly three values")
    return values  # type: ignore[return-value]
