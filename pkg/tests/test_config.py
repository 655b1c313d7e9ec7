import dataclasses

import pytest

from camograph.config import (
    VARIANTS,
    RunConfig,
    apply_variant,
    parse_config,
    resolve_variant,
    write_config,
)
from camograph.errors import ConfigurationError


def test_defaults_validate():
    cfg = RunConfig()
    assert cfg.validate() is cfg
    assert cfg.rgb_ratios == (0.2, 0.4, 0.6, 0.8)
    assert cfg.depth_ratio == 0.5
    assert cfg.ssag_ratio == 0.7


@pytest.mark.parametrize("field,value", [
    ("lr", 0.0),
    ("lr", -1e-4),
    ("epochs", 0),
    ("batch", 0),
    ("input_size", 100),
    ("input_size", -64),
    ("embed_dim", 30),  # not divisible by 4 heads
    ("hga_layers", -1),
    ("rgb_ratios", (0.2, 0.4, 0.6)),
    ("rgb_ratios", (0.2, 0.4, 0.6, 1.5)),
    ("depth_ratio", 0.0),
    ("ssag_ratio", -0.1),
    ("unpool_fill", "mirror"),
    ("loss_mode", "focal"),
    ("fp_mode", "sum"),
    ("max_steps", -5),
])
def test_validate_rejects(field, value):
    cfg = dataclasses.replace(RunConfig(), **{field: value})
    with pytest.raises(ConfigurationError):
        cfg.validate()


def test_roundtrip(tmp_path):
    cfg = RunConfig(variant="no_hga", input_size=64, embed_dim=32, heads=2,
                    rgb_ratios=(0.5, 0.5, 0.5, 0.5), lr=1e-3, batch=2,
                    epochs=3, seed=7, freeze_sam=True, augment=True,
                    max_steps=50)
    path = tmp_path / "run.cfg"
    write_config(cfg, path)
    assert parse_config(path) == cfg


def test_parse_comments_and_blanks(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# a comment\n\nlr = 0.001  # trailing\nbatch=2\n")
    cfg = parse_config(path)
    assert cfg.lr == 0.001
    assert cfg.batch == 2
    assert cfg.variant == "full"


@pytest.mark.parametrize("text", [
    "unknown_key=1\n",
    "freeze_sam=maybe\n",
    "just a line without equals\n",
    "lr=0\n",
    "lr=abc\n",
    "rgb_ratios=0.2,oops,0.6,0.8\n",
])
def test_parse_rejects(tmp_path, text):
    path = tmp_path / "bad.cfg"
    path.write_text(text)
    with pytest.raises(ConfigurationError):
        parse_config(path)


def test_variant_registry_size_and_uniqueness():
    assert len(VARIANTS) == 26
    labels = [label for label, _, _ in VARIANTS.values()]
    assert len(set(labels)) == len(labels)


def test_resolve_variant_by_slug_and_label():
    assert resolve_variant("full") == "full"
    assert resolve_variant("Ours") == "full"
    assert resolve_variant("w/o hga") == "no_hga"
    assert resolve_variant("W/O DEPTH") == "no_depth"
    assert resolve_variant("B+CGE") == "base+cge"
    with pytest.raises(ConfigurationError):
        resolve_variant("nonexistent")


def test_apply_variant_overrides():
    cfg, arch, label = apply_variant(RunConfig(variant="no_hga"))
    assert cfg.hga_layers == 0
    assert label == "w/o HGA"
    assert arch.use_cge and arch.use_agr

    cfg, arch, _ = apply_variant(RunConfig(variant="hga_n3"))
    assert cfg.hga_layers == 3

    cfg, arch, _ = apply_variant(RunConfig(variant="cge_r_desc"))
    assert cfg.rgb_ratios == (0.8, 0.6, 0.4, 0.2)

    cfg, arch, _ = apply_variant(RunConfig(variant="base"))
    assert not arch.use_cge and not arch.use_agr

    cfg, arch, _ = apply_variant(RunConfig(variant="no_depth"))
    assert not arch.use_depth

    cfg, arch, _ = apply_variant(RunConfig(variant="direct"))
    assert arch.csp == "direct"

    cfg, arch, _ = apply_variant(RunConfig(variant="ssag_r03"))
    assert cfg.ssag_ratio == 0.3


def test_apply_variant_accepts_labels_and_degenerate_lr():
    cfg, _, _ = apply_variant(RunConfig(variant="w/ Direct", lr=0.0))
    assert cfg.variant == "direct"
    assert cfg.lr == 0.0  # programmatic runs may use a frozen optimizer
