"""Run configuration, the ablation-variant registry, and config-file I/O."""

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigurationError


@dataclass
class RunConfig:
    variant: str = "full"
    input_size: int = 128
    embed_dim: int = 64
    heads: int = 4
    hga_layers: int = 1
    rgb_ratios: tuple = (0.2, 0.4, 0.6, 0.8)
    depth_ratio: float = 0.5
    ssag_ratio: float = 0.7
    lr: float = 5e-5
    batch: int = 4
    epochs: int = 1
    seed: int = 0
    unpool_fill: str = "passthrough"  # or "zeros"
    loss_mode: str = "weighted"       # or "plain"
    fp_mode: str = "aggregate"        # or "level4"
    freeze_sam: bool = False
    augment: bool = False
    max_steps: int = 0                # 0 = run every epoch to completion

    def validate(self):
        if self.lr <= 0:
            raise ConfigurationError("lr must be positive")
        if self.epochs < 1:
            raise ConfigurationError("epochs must be at least 1")
        if self.batch < 1:
            raise ConfigurationError("batch must be at least 1")
        if self.input_size % 32 != 0 or self.input_size <= 0:
            raise ConfigurationError("input_size must be a positive multiple of 32")
        if self.embed_dim % self.heads != 0:
            raise ConfigurationError("embed_dim must divide evenly into heads")
        if self.hga_layers < 0:
            raise ConfigurationError("hga_layers must be nonnegative")
        if len(self.rgb_ratios) != 4:
            raise ConfigurationError("rgb_ratios needs exactly 4 entries")
        for r in (*self.rgb_ratios, self.depth_ratio, self.ssag_ratio):
            if not 0.0 < r <= 1.0:
                raise ConfigurationError(f"pooling ratio {r} outside (0, 1]")
        if self.unpool_fill not in ("passthrough", "zeros"):
            raise ConfigurationError(f"unknown unpool_fill '{self.unpool_fill}'")
        if self.loss_mode not in ("weighted", "plain"):
            raise ConfigurationError(f"unknown loss_mode '{self.loss_mode}'")
        if self.fp_mode not in ("aggregate", "level4"):
            raise ConfigurationError(f"unknown fp_mode '{self.fp_mode}'")
        if self.max_steps < 0:
            raise ConfigurationError("max_steps must be nonnegative")
        return self


@dataclass
class Arch:
    """Structural switches derived from the variant name."""

    use_cge: bool = True
    use_agr: bool = True
    use_depth: bool = True
    cge_pooling: bool = True
    cge_typed: bool = True
    cge_simple_fusion: bool = False
    ssag: bool = True
    ssag_pooling: bool = True
    ssag_attention: bool = True
    csp: str = "full"  # full | none | no_edges | direct


# slug -> (table row label, Arch overrides, RunConfig overrides)
VARIANTS = {
    "full": ("Ours", {}, {}),
    "base": ("B", dict(use_cge=False, use_agr=False), {}),
    "base+cge": ("B+CGE", dict(use_agr=False), {}),
    "base+agr": ("B+AGR", dict(use_cge=False), {}),
    "no_depth": ("w/o Depth", dict(use_depth=False), {}),
    "simple_fusion": ("w/ SF", dict(cge_simple_fusion=True), {}),
    "uniform_graph": ("w/ UG", dict(cge_typed=False), {}),
    "cge_no_pool": ("w/o GP&UP (CGE)", dict(cge_pooling=False), {}),
    "no_hga": ("w/o HGA", {}, dict(hga_layers=0)),
    "hga_n1": ("HGA n=1", {}, dict(hga_layers=1)),
    "hga_n2": ("HGA n=2", {}, dict(hga_layers=2)),
    "hga_n3": ("HGA n=3", {}, dict(hga_layers=3)),
    "cge_r_flat02": ("r=[0.2,0.2,0.2,0.2]", {},
                     dict(rgb_ratios=(0.2, 0.2, 0.2, 0.2))),
    "cge_r_flat05": ("r=[0.5,0.5,0.5,0.5]", {},
                     dict(rgb_ratios=(0.5, 0.5, 0.5, 0.5))),
    "cge_r_flat08": ("r=[0.8,0.8,0.8,0.8]", {},
                     dict(rgb_ratios=(0.8, 0.8, 0.8, 0.8))),
    "cge_r_desc": ("r=[0.8,0.6,0.4,0.2]", {},
                   dict(rgb_ratios=(0.8, 0.6, 0.4, 0.2))),
    "no_ssag": ("w/o SSAG", dict(ssag=False), {}),
    "agr_no_pool": ("w/o GP&UP (AGR)", dict(ssag_pooling=False), {}),
    "no_att": ("w/o Att", dict(ssag_attention=False), {}),
    "no_csp": ("w/o CSP", dict(csp="none"), {}),
    "no_edge": ("w/o Edge", dict(csp="no_edges"), {}),
    "direct": ("w/ Direct", dict(csp="direct"), {}),
    "ssag_r03": ("SSAG r=0.3", {}, dict(ssag_ratio=0.3)),
    "ssag_r05": ("SSAG r=0.5", {}, dict(ssag_ratio=0.5)),
    "ssag_r07": ("SSAG r=0.7", {}, dict(ssag_ratio=0.7)),
    "ssag_r09": ("SSAG r=0.9", {}, dict(ssag_ratio=0.9)),
}

_ALIASES = {label.lower(): slug for slug, (label, _, _) in VARIANTS.items()}


def resolve_variant(name: str) -> str:
    """Accepts either a registry slug or a table row label."""
    if name in VARIANTS:
        return name
    slug = _ALIASES.get(name.strip().lower())
    if slug is None:
        raise ConfigurationError(
            f"unknown variant '{name}' (known: {', '.join(sorted(VARIANTS))})")
    return slug


def apply_variant(cfg: RunConfig):
    """Resolve cfg.variant into (resolved cfg, Arch, row label).

    Deliberately does not call validate(): the full invariant set (lr > 0
    among them) is enforced where configs enter from files or the CLI,
    while programmatic callers may run degenerate settings such as a
    zero learning rate.
    """
    slug = resolve_variant(cfg.variant)
    label, arch_over, cfg_over = VARIANTS[slug]
    cfg = dataclasses.replace(cfg, variant=slug, **cfg_over)
    return cfg, Arch(**arch_over), label


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _parse_value(name, text):
    text = text.strip()
    if name == "rgb_ratios":
        parts = [p for p in text.replace("[", "").replace("]", "").split(",") if p]
        try:
            return tuple(float(p) for p in parts)
        except ValueError:
            raise ConfigurationError(f"bad value for {name}: '{text}'") from None
    default = getattr(RunConfig(), name)
    if isinstance(default, bool):
        if text.lower() in ("true", "1", "yes"):
            return True
        if text.lower() in ("false", "0", "no"):
            return False
        raise ConfigurationError(f"bad boolean for {name}: '{text}'")
    try:
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError:
        raise ConfigurationError(f"bad value for {name}: '{text}'") from None
    return text


def parse_config(path) -> RunConfig:
    """Flat key=value text, one pair per line, # starts a comment."""
    cfg = RunConfig()
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"expected key=value, got '{raw.strip()}'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigurationError(f"unknown config key '{key}'")
        setattr(cfg, key, _parse_value(key, value))
    cfg.validate()
    return cfg


def write_config(cfg: RunConfig, path):
    lines = []
    for f in dataclasses.fields(RunConfig):
        value = getattr(cfg, f.name)
        if f.name == "rgb_ratios":
            value = ",".join(str(v) for v in value)
        lines.append(f"{f.name}={value}")
    Path(path).write_text("\n".join(lines) + "\n")
