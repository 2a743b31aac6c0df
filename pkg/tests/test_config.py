from pathlib import Path

import pytest

from serfuse.config import (
    DEFAULT_C_GRID,
    FeatureRecipe,
    RunConfig,
    load_config,
    parse_config,
)
from serfuse.errors import ConfigError

BASIC = """\
run.manifest = corpus/manifest.tsv
run.out = results
run.seed = 7

feature.boaw-60 = boaw clip_db=-60 n=2000 assignments=10
feature.text-gold = text source=gold
feature.text-asr = text source=asr:main hash_dim=512

svm.c_grid = 0.5 2.0
wer.sources = asr:main
sweep.rates = 0.0 0.1 0.2
fusion.groups = audio all
"""


def test_parse_basic():
    cfg = parse_config(BASIC, base_dir=Path("/work"))
    assert cfg.manifest == Path("/work/corpus/manifest.tsv")
    assert cfg.out == Path("/work/results")
    assert cfg.seed == 7
    assert cfg.sample_rate == 16000
    assert cfg.c_grid == (0.5, 2.0)
    assert cfg.wer_sources == ("asr:main",)
    assert cfg.sweep_rates == (0.0, 0.1, 0.2)
    assert cfg.sweep_mix == (0.6, 0.2, 0.2)
    assert cfg.fusion_groups == ("audio", "all")
    assert cfg.fusion_min_size == 3
    names = [r.name for r in cfg.features]
    assert names == ["boaw-60", "text-asr", "text-gold"]
    boaw = cfg.recipe("boaw-60")
    assert boaw.kind == "boaw"
    assert boaw.opt("clip_db") == "-60"
    assert boaw.opt("mel", "12") == "12"


def test_defaults_when_keys_absent():
    cfg = parse_config("run.manifest = m.tsv\n")
    assert cfg.seed == 0
    assert cfg.c_grid == DEFAULT_C_GRID
    assert cfg.svm_tol == 1e-4
    assert cfg.svm_max_epochs == 1000
    assert cfg.out == Path("out")
    assert cfg.features == ()


def test_comments_and_blank_lines_ignored():
    cfg = parse_config("# header\n\nrun.manifest = m.tsv\n  # trailing\n")
    assert cfg.manifest == Path("m.tsv")


@pytest.mark.parametrize(
    "text,match",
    [
        ("run.manifest = m.tsv\nbogus.key = 1\n", "unknown config keys"),
        ("run.manifest = m.tsv\nrun.manifest = n.tsv\n", "duplicate key"),
        ("run.manifest = m.tsv\nnosection = 1\n", "section prefix"),
        ("run.manifest m.tsv\n", "expected key = value"),
        ("sweep.rates = 0.1\n", "missing run.manifest"),
        ("run.manifest = m.tsv\nrun.seed = x\n", "bad numeric"),
        ("run.manifest = m.tsv\nsweep.rates = 1.5\n", "outside"),
        ("run.manifest = m.tsv\nsweep.mix = 0.5 0.5\n", "three values"),
        ("run.manifest = m.tsv\nfeature.x = boaw zap=1\n", "unknown option"),
        ("run.manifest = m.tsv\nfeature.x = video\n", "unknown kind"),
        ("run.manifest = m.tsv\nfeature.x = text\n", "needs source"),
        ("run.manifest = m.tsv\nfeature.x = file\n", "needs path"),
        ("run.manifest = m.tsv\nfeature.x = boaw clip_db\n", "bad option"),
        ("run.manifest = m.tsv\nsvm.c_grid = -1.0\n", "positive"),
    ],
)
def test_parse_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(text)


def test_recipe_lookup_missing():
    cfg = parse_config("run.manifest = m.tsv\n")
    with pytest.raises(ConfigError, match="no feature named"):
        cfg.recipe("ghost")


def test_canonical_is_sorted_and_stable():
    cfg = parse_config(BASIC, base_dir=Path("/work"))
    canon = cfg.canonical()
    lines = canon.strip().splitlines()
    assert lines == sorted(lines)
    assert canon == parse_config(BASIC, base_dir=Path("/work")).canonical()


def test_config_hash_ignores_out_directory():
    """Same computation into two destinations must share one cache name."""
    a = parse_config(BASIC, base_dir=Path("/work"))
    b = parse_config(BASIC.replace("run.out = results", "run.out = elsewhere"),
                     base_dir=Path("/work"))
    assert a.out != b.out
    assert a.config_hash() == b.config_hash()
    assert len(a.config_hash()) == 12
    # Anything else shifts the hash.
    c = parse_config(BASIC.replace("run.seed = 7", "run.seed = 8"),
                     base_dir=Path("/work"))
    assert a.config_hash() != c.config_hash()


def test_load_config_resolves_relative_to_file(tmp_path):
    (tmp_path / "run.cfg").write_text("run.manifest = data/m.tsv\n", encoding="utf-8")
    cfg = load_config(tmp_path / "run.cfg")
    assert cfg.manifest == tmp_path / "data" / "m.tsv"
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "absent.cfg")


def test_validate_paths(tmp_path):
    manifest = tmp_path / "m.tsv"
    cfg = RunConfig(manifest=manifest, out=tmp_path / "out")
    with pytest.raises(ConfigError, match="manifest not found"):
        cfg.validate_paths()
    manifest.write_text("id\tsession\tspeaker\tlabel\tgold_transcript\n", encoding="utf-8")
    cfg.validate_paths()
    external = FeatureRecipe(
        name="ext", kind="file", options=(("path", str(tmp_path / "ext.tsv")),)
    )
    cfg2 = RunConfig(manifest=manifest, out=tmp_path / "out", features=(external,))
    with pytest.raises(ConfigError, match="file not found"):
        cfg2.validate_paths()


def test_runconfig_validation():
    with pytest.raises(ConfigError, match="non-negative"):
        RunConfig(manifest=Path("m"), out=Path("o"), seed=-1)
    with pytest.raises(ConfigError, match="sum to 1"):
        RunConfig(manifest=Path("m"), out=Path("o"), sweep_mix=(0.5, 0.4, 0.2))
    dup = (
        FeatureRecipe(name="x", kind="text", options=(("source", "gold"),)),
        FeatureRecipe(name="x", kind="text", options=(("source", "gold"),)),
    )
    with pytest.raises(ConfigError, match="duplicate feature names"):
        RunConfig(manifest=Path("m"), out=Path("o"), features=dup)
