"""Pipeline driver: extract features, train, score transcripts, fuse, report.

Every command reads one flat config file, writes its artifacts under the
output directory, and appends a run log recording the config hash, the seed
and a checksum per artifact. Outputs contain no timestamps or absolute
paths, so identical config + seed gives byte-identical trees.

Output directory precedence: --out flag, then the SERFUSE_OUT environment
variable, then run.out from the config.
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

from .boaw import boaw_features
from .cache import CachedPredictions, load_cached, write_predictions
from .classify import fit_standardizer, predict, select_C, standardize_features, uar_of
from .config import RunConfig, load_config
from .corpus import (
    FeatureSet,
    Manifest,
    load_feature_set,
    load_manifest,
    split_ids,
    write_feature_set,
)
from .dsp import SpectrogramConfig, extract_llds, read_waveform
from .errors import FeatureSetError, FusionError, SerfuseError, TranscriptError
from .figures import fusion_bars, tradeoff_curve, uar_bars, wer_bars
from .fusion import GroupFilter, fusion_search, report_table
from .textfeat import TextFeatConfig, fit_text_features
from .transcripts import (
    CorruptionPlan,
    corpus_error_rates,
    corpus_vocabulary,
    corrupt_corpus,
)
from .util import pct, sha256_file, spearman

ENV_OUT = "SERFUSE_OUT"


def _features_dir(config: RunConfig) -> Path:
    return config.out / "features"


def _cache_dir(config: RunConfig) -> Path:
    return config.out / "cache" / config.config_hash()


def _reports_dir(config: RunConfig) -> Path:
    return config.out / "reports"


def _write_log(config: RunConfig, command: str, artifacts: list[Path]) -> Path:
    log_dir = config.out / "logs"
    log_dir.mkdir(parents=True, exist_ok=True)
    lines = [
        f"command = {command}",
        f"config_hash = {config.config_hash()}",
        f"seed = {config.seed}",
    ]
    for path in sorted(artifacts):
        rel = path.relative_to(config.out).as_posix()
        lines.append(f"artifact = {rel} sha256={sha256_file(path)}")
    log_path = log_dir / f"{command}.log"
    log_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return log_path


def _load_manifest(config: RunConfig) -> Manifest:
    config.validate_paths()
    return load_manifest(config.manifest)


def _kv_line(pairs: list[tuple[str, str]]) -> str:
    return "\t".join(f"{k}={v}" for k, v in pairs)


def _parse_kv(path: Path) -> list[dict[str, str]]:
    records = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = {}
        for field in line.split("\t"):
            key, _, value = field.partition("=")
            record[key] = value
        records.append(record)
    return records


# ---------------------------------------------------------------- extract


def cmd_extract(config: RunConfig, jobs: int = 1) -> list[Path]:
    manifest = _load_manifest(config)
    internal = [r for r in config.features if r.kind != "file"]
    if not internal:
        print("extract: no internal feature recipes declared; nothing to do")
        _write_log(config, "extract", [])
        return []
    out_dir = _features_dir(config)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    lld_cache: dict[float, dict] = {}
    for recipe in internal:
        if recipe.kind == "boaw":
            features = _extract_boaw(config, manifest, recipe, lld_cache)
        else:
            text_config = TextFeatConfig(
                hash_dim=int(recipe.opt("hash_dim", "1024")),
                ngram_max=int(recipe.opt("ngram_max", "1")),
            )
            features, _ = fit_text_features(
                manifest, recipe.opt("source"), text_config, name=recipe.name
            )
        path = out_dir / f"{recipe.name}.tsv"
        write_feature_set(path, features)
        print(f"extract: wrote {recipe.name} (dim {features.dim}) to {path}")
        written.append(path)
    _write_log(config, "extract", written)
    return written


def _extract_boaw(config: RunConfig, manifest: Manifest, recipe, lld_cache) -> FeatureSet:
    clip_db = float(recipe.opt("clip_db", "-60"))
    spec_config = SpectrogramConfig(
        clip_db_threshold=clip_db,
        lld_mel_bands=int(recipe.opt("mel", "12")),
    )
    key = (clip_db, spec_config.lld_mel_bands)
    if key not in lld_cache:
        sequences = {}
        for utt in manifest:
            if utt.audio_path is None:
                raise FeatureSetError(
                    f"recipe {recipe.name!r}: utterance {utt.id!r} has no audio_path"
                )
            wave = read_waveform(utt.audio_path, sample_rate=config.sample_rate)
            sequences[utt.id] = extract_llds(wave, spec_config)
        lld_cache[key] = sequences
    return boaw_features(
        manifest,
        lld_cache[key],
        size_n=int(recipe.opt("n", "2000")),
        assignments=int(recipe.opt("assignments", "10")),
        seed=config.seed,
        name=recipe.name,
    )


# --------------------------------------------------------------- evaluate


def cmd_evaluate(config: RunConfig, jobs: int = 1) -> Path:
    manifest = _load_manifest(config)
    if not config.features:
        print("evaluate: no feature sets declared; nothing to do")
        return _write_log(config, "evaluate", [])
    cache_dir = _cache_dir(config)
    cache_dir.mkdir(parents=True, exist_ok=True)
    reports = _reports_dir(config)
    reports.mkdir(parents=True, exist_ok=True)
    dev_ids = split_ids(manifest, "dev")
    test_ids = split_ids(manifest, "test")
    train_ids = split_ids(manifest, "train")

    rows = []
    artifacts = []
    for recipe in config.features:
        features = _load_features(config, manifest, recipe)
        standardizer = fit_standardizer(features, train_ids)
        standardized = standardize_features(features, standardizer)
        model, dev_uar = select_C(
            standardized,
            manifest,
            grid=config.c_grid,
            seed=config.seed,
            tol=config.svm_tol,
            max_epochs=config.svm_max_epochs,
        )
        dev_table = predict(model, None, standardized, dev_ids)
        test_table = predict(model, None, standardized, test_ids)
        test_uar = uar_of(test_table, manifest, test_ids)
        for split, table in (("dev", dev_table), ("test", test_table)):
            path = cache_dir / f"{recipe.name}__C{repr(model.C)}__{split}.tsv"
            write_predictions(path, table, recipe.name, features.modality, model.C, split)
            artifacts.append(path)
        rows.append((recipe.name, features.modality, model.C, dev_uar, test_uar))
        print(
            f"evaluate: {recipe.name} C={model.C} dev {pct(dev_uar)}% test {pct(test_uar)}%"
        )

    tsv = reports / "evaluate.tsv"
    lines = ["Set\tModality\tC\tDev\tTest"]
    for name, modality, c, dev_uar, test_uar in rows:
        lines.append(f"{name}\t{modality}\t{repr(c)}\t{pct(dev_uar)}\t{pct(test_uar)}")
    tsv.write_text("\n".join(lines) + "\n", encoding="utf-8")
    kv = reports / "evaluate.kv"
    kv_lines = [
        _kv_line(
            [
                ("set", name),
                ("modality", modality),
                ("c", repr(c)),
                ("dev", repr(dev_uar)),
                ("test", repr(test_uar)),
            ]
        )
        for name, modality, c, dev_uar, test_uar in rows
    ]
    kv.write_text("\n".join(kv_lines) + "\n", encoding="utf-8")
    _write_log(config, "evaluate", artifacts + [tsv, kv])
    return tsv


def _load_features(config: RunConfig, manifest: Manifest, recipe):
    if recipe.kind == "file":
        return load_feature_set(Path(recipe.opt("path")), manifest)
    path = _features_dir(config) / f"{recipe.name}.tsv"
    if not path.is_file():
        raise FeatureSetError(
            f"feature file for set {recipe.name!r} not found at {path}; "
            f"run `serfuse extract` first"
        )
    return load_feature_set(path, manifest)


# -------------------------------------------------------------------- wer


def cmd_wer(config: RunConfig, jobs: int = 1) -> Path:
    manifest = _load_manifest(config)
    reports = _reports_dir(config)
    reports.mkdir(parents=True, exist_ok=True)
    sources = ["gold"] + [s for s in config.wer_sources if s != "gold"]
    rows = []
    for source in sources:
        wer, cer = corpus_error_rates(manifest, source)
        rows.append((source, wer, cer))
        print(f"wer: {source} WER {pct(wer)}% CER {pct(cer)}%")
    tsv = reports / "wer.tsv"
    lines = ["SetUp\tWER%\tCER%"]
    for source, wer, cer in rows:
        lines.append(f"{source}\t{pct(wer)}\t{pct(cer)}")
    tsv.write_text("\n".join(lines) + "\n", encoding="utf-8")
    kv = reports / "wer.kv"
    kv.write_text(
        "\n".join(
            _kv_line([("source", s), ("wer", repr(w)), ("cer", repr(c))]) for s, w, c in rows
        )
        + "\n",
        encoding="utf-8",
    )
    _write_log(config, "wer", [tsv, kv])
    return tsv


# ---------------------------------------------------------- corrupt-sweep


def cmd_corrupt_sweep(config: RunConfig, jobs: int = 1) -> Path:
    manifest = _load_manifest(config)
    if not config.sweep_rates:
        raise SerfuseError("corrupt-sweep: no sweep.rates configured")
    vocab = corpus_vocabulary(manifest)
    if not vocab:
        raise TranscriptError("corrupt-sweep: gold transcripts contain no tokens")
    reports = _reports_dir(config)
    reports.mkdir(parents=True, exist_ok=True)
    text_config = TextFeatConfig()
    train_ids = split_ids(manifest, "train")

    rows = []
    for rate in config.sweep_rates:
        plan = CorruptionPlan(
            target_rate=rate, mix=config.sweep_mix, seed=config.seed, vocabulary=vocab
        )
        hypotheses = corrupt_corpus(manifest, plan)
        wer, _ = corpus_error_rates(manifest, hypotheses)
        sweep_manifest = _with_asr(manifest, "sweep", hypotheses)
        features, _ = fit_text_features(sweep_manifest, "asr:sweep", text_config, name="sweep-text")
        standardizer = fit_standardizer(features, train_ids)
        standardized = standardize_features(features, standardizer)
        _, dev_uar = select_C(
            standardized,
            sweep_manifest,
            grid=config.c_grid,
            seed=config.seed,
            tol=config.svm_tol,
            max_epochs=config.svm_max_epochs,
        )
        rows.append((rate, wer, dev_uar))
        print(f"corrupt-sweep: rate {rate} WER {pct(wer)}% dev UAR {pct(dev_uar)}%")

    rho = spearman([r[1] for r in rows], [r[2] for r in rows])
    rho_text = "undefined" if rho != rho else f"{rho:+.4f}"
    tsv = reports / "sweep.tsv"
    lines = ["Rate\tWER%\tDevUAR%"]
    for rate, wer, dev_uar in rows:
        lines.append(f"{repr(rate)}\t{pct(wer)}\t{pct(dev_uar)}")
    lines.append(f"# Spearman(WER, UAR) = {rho_text}")
    tsv.write_text("\n".join(lines) + "\n", encoding="utf-8")
    kv = reports / "sweep.kv"
    kv_lines = [
        _kv_line([("rate", repr(rate)), ("wer", repr(wer)), ("dev_uar", repr(dev_uar))])
        for rate, wer, dev_uar in rows
    ]
    kv_lines.append(_kv_line([("spearman", repr(rho))]))
    kv.write_text("\n".join(kv_lines) + "\n", encoding="utf-8")
    print(f"corrupt-sweep: Spearman(WER, dev UAR) = {rho_text}")
    _write_log(config, "corrupt-sweep", [tsv, kv])
    return tsv


def _with_asr(manifest: Manifest, system: str, hypotheses: dict[str, str]) -> Manifest:
    updated = []
    for utt in manifest:
        asr = dict(utt.asr_transcripts)
        asr[system] = hypotheses[utt.id]
        updated.append(dataclasses.replace(utt, asr_transcripts=asr))
    return Manifest(updated, split_rule=manifest.split_rule)


# ------------------------------------------------------------------- fuse


def cmd_fuse(config: RunConfig, jobs: int = 1) -> Path:
    manifest = _load_manifest(config)
    cache_dir = _cache_dir(config)
    tables: dict[str, CachedPredictions] = {}
    for recipe in config.features:
        tables[recipe.name] = _cached_for(cache_dir, recipe.name)
    if not tables:
        raise FusionError("fuse: no feature sets declared in config")
    reports = _reports_dir(config)
    reports.mkdir(parents=True, exist_ok=True)

    group_specs = config.fusion_groups or ("all",)
    summaries = []
    combo_lines = ["Group\tSets\tDev\tTest\tTies"]
    kv_lines = []
    for spec in group_specs:
        group = GroupFilter.parse(spec)
        results, summary = fusion_search(
            tables, group, manifest, min_size=config.fusion_min_size, jobs=jobs
        )
        summaries.append(summary)
        for res in results:
            combo_lines.append(
                "\t".join(
                    [
                        group.label,
                        "+".join(res.combination.feature_set_names),
                        pct(res.dev_uar),
                        pct(res.test_uar),
                        str(res.tie_count),
                    ]
                )
            )
        kv_lines.append(
            _kv_line(
                [
                    ("group", summary.group_label),
                    ("count", str(summary.count)),
                    ("mean_dev", repr(summary.mean_dev_uar)),
                    ("std_dev", repr(summary.std_dev_uar)),
                    ("max_dev", repr(summary.max_dev_uar)),
                    ("test", repr(summary.test_uar)),
                    ("best", "+".join(summary.best.feature_set_names)),
                ]
            )
        )
        print(
            f"fuse: {summary.group_label}: {summary.count} combos, "
            f"max dev {pct(summary.max_dev_uar)}% test {pct(summary.test_uar)}%"
        )

    tsv = reports / "fusion.tsv"
    tsv.write_text(report_table(summaries), encoding="utf-8")
    kv = reports / "fusion.kv"
    kv.write_text("\n".join(kv_lines) + "\n", encoding="utf-8")
    combos = reports / "fusion_combinations.tsv"
    combos.write_text("\n".join(combo_lines) + "\n", encoding="utf-8")
    _write_log(config, "fuse", [tsv, kv, combos])
    return tsv


def _cached_for(cache_dir: Path, name: str) -> CachedPredictions:
    dev_matches = sorted(cache_dir.glob(f"{name}__C*__dev.tsv"))
    if not dev_matches:
        raise FusionError(
            f"no cached predictions for set {name!r} under {cache_dir}; "
            f"run `serfuse evaluate` first"
        )
    if len(dev_matches) > 1:
        raise FusionError(
            f"multiple cached prediction files for set {name!r} under {cache_dir}; "
            f"clear the cache directory and re-run `serfuse evaluate`"
        )
    dev_path = dev_matches[0]
    test_path = dev_path.with_name(dev_path.name.replace("__dev.tsv", "__test.tsv"))
    if not test_path.is_file():
        raise FusionError(f"cache for set {name!r} is missing the test half: {test_path}")
    return load_cached(dev_path, test_path)


# ----------------------------------------------------------------- report


def cmd_report(config: RunConfig, jobs: int = 1) -> list[Path]:
    reports = _reports_dir(config)
    figures_dir = reports / "figures"
    rendered = []

    evaluate_kv = reports / "evaluate.kv"
    if evaluate_kv.is_file():
        rows = [
            (r["set"], float(r["dev"]), float(r["test"])) for r in _parse_kv(evaluate_kv)
        ]
        figures_dir.mkdir(parents=True, exist_ok=True)
        rendered.append(uar_bars(figures_dir / "evaluate.png", rows))
    wer_kv = reports / "wer.kv"
    if wer_kv.is_file():
        rows = [(r["source"], float(r["wer"]), float(r["cer"])) for r in _parse_kv(wer_kv)]
        figures_dir.mkdir(parents=True, exist_ok=True)
        rendered.append(wer_bars(figures_dir / "wer.png", rows))
    sweep_kv = reports / "sweep.kv"
    if sweep_kv.is_file():
        records = _parse_kv(sweep_kv)
        rows = [
            (float(r["rate"]), float(r["wer"]), float(r["dev_uar"]))
            for r in records
            if "rate" in r
        ]
        rho = next((float(r["spearman"]) for r in records if "spearman" in r), float("nan"))
        figures_dir.mkdir(parents=True, exist_ok=True)
        rendered.append(
            tradeoff_curve(figures_dir / "sweep.png", rows, None if rho != rho else rho)
        )
    fusion_kv = reports / "fusion.kv"
    if fusion_kv.is_file():
        rows = [
            (r["group"], float(r["max_dev"]), float(r["test"])) for r in _parse_kv(fusion_kv)
        ]
        figures_dir.mkdir(parents=True, exist_ok=True)
        rendered.append(fusion_bars(figures_dir / "fusion.png", rows))

    if not rendered:
        raise SerfuseError(
            "report: no delimited outputs found under "
            f"{reports}; run evaluate/wer/corrupt-sweep/fuse first"
        )
    for path in rendered:
        print(f"report: rendered {path}")
    _write_log(config, "report", rendered)
    return rendered


# ------------------------------------------------------------------ entry


COMMANDS = {
    "extract": cmd_extract,
    "evaluate": cmd_evaluate,
    "wer": cmd_wer,
    "corrupt-sweep": cmd_corrupt_sweep,
    "fuse": cmd_fuse,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="serfuse",
        description="Speech emotion recognition benchmark: features, SVMs, WER, fusion.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, handler in COMMANDS.items():
        cmd = sub.add_parser(name, help=handler.__doc__)
        cmd.add_argument("--config", required=True, help="path to the run config file")
        cmd.add_argument("--seed", type=int, default=None, help="override run.seed")
        cmd.add_argument("--out", default=None, help="override the output directory")
        cmd.add_argument("--jobs", type=int, default=1, help="worker count where supported")
    return parser


def _effective_config(args) -> RunConfig:
    config = load_config(Path(args.config))
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    out = args.out or os.environ.get(ENV_OUT)
    if out:
        overrides["out"] = Path(out)
    if overrides:
        config = dataclasses.replace(config, **overrides)
    return config


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _effective_config(args)
        COMMANDS[args.command](config, jobs=max(1, args.jobs))
    except SerfuseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001  (CLI boundary)
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
