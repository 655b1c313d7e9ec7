"""Network assembly: encoders, graph stages, decoder, variant wiring."""

import torch
from torch import nn

from .agr import AnchorGeneration, CrossLevelPropagation, LevelProjections
from .backbones import DepthEncoder, RgbEncoder, SamEncoder, StubConfig
from .cge import CrossModalGraphEnhancement
from .config import RunConfig, apply_variant
from .errors import InputError
from .heads import MaskDecoder, SideHeads


class CamoGraphNet(nn.Module):
    """Depth-prompted segmentation over a SAM-style stub hierarchy.

    The variant name in the config decides which stages exist: the
    baseline keeps only the SAM stub, per-level projections, and the
    decoder; the full model adds the texture branch, cross-modal graph
    enhancement, anchor generation, and cross-level propagation.
    """

    def __init__(self, cfg: RunConfig):
        super().__init__()
        cfg, arch, label = apply_variant(cfg)
        self.cfg = cfg
        self.arch = arch
        self.label = label

        d = cfg.embed_dim
        stub = StubConfig(embed_dim=d, input_size=cfg.input_size)
        self.stub = stub
        self.sam = SamEncoder(stub, frozen=cfg.freeze_sam)
        self.depth_enc = DepthEncoder(stub) if arch.use_depth else None
        self.pvt = RgbEncoder(stub) if (arch.use_cge or arch.use_agr) else None

        self.cge = None
        if arch.use_cge:
            self.cge = CrossModalGraphEnhancement(
                stub.widths, d if arch.use_depth else None, d, cfg.heads,
                rgb_ratios=cfg.rgb_ratios, depth_ratio=cfg.depth_ratio,
                n_layers=cfg.hga_layers, typed=arch.cge_typed,
                pooling=arch.cge_pooling,
                simple_fusion=arch.cge_simple_fusion,
                fp_mode=cfg.fp_mode, unpool_fill=cfg.unpool_fill)

        if arch.use_agr:
            # without the graph enhancement stage, the anchor's source is
            # the raw deepest texture-branch map behind a 1x1 projection
            self.fp_proj = None if arch.use_cge else \
                nn.Conv2d(stub.widths[3], d, kernel_size=1)
            self.ssag = None
            if arch.ssag:
                self.ssag = AnchorGeneration(
                    d, stub.widths[3], d, cfg.heads, ratio=cfg.ssag_ratio,
                    pooling=arch.ssag_pooling, attention=arch.ssag_attention,
                    unpool_fill=cfg.unpool_fill)
            if arch.csp == "none":
                self.csp = LevelProjections(stub.widths[:3], d)
            else:
                self.csp = CrossLevelPropagation(stub.widths[:3], d,
                                                 mode=arch.csp)
        else:
            self.plain_projs = nn.ModuleList(
                [nn.Conv2d(c, d, kernel_size=1) for c in stub.widths])

        self.decoder = MaskDecoder(d, use_depth=arch.use_depth)
        self.sides = SideHeads(d)

    def forward(self, image, depth=None, trace=None):
        """image [B, 3, H, W]; depth [B, 1, H, W] unless the variant is
        depth-free. Returns (main prediction, 3 side predictions). A
        trace dict, when given, collects live intermediate shapes.
        """
        out_size = tuple(image.shape[-2:])
        s_levels = self.sam(image)
        if trace is not None:
            trace["pyramid"] = [tuple(m.shape[-2:]) for m in s_levels]
            trace["pm"] = out_size

        f_depth = None
        if self.arch.use_depth:
            if depth is None:
                raise InputError("this configuration requires a depth map")
            f_depth = self.depth_enc(depth)
            if trace is not None:
                trace["depth_size"] = tuple(f_depth.shape[-2:])

        e_d = f_depth
        f_p = None
        if self.arch.use_cge:
            p_levels = self.pvt(image)
            sub = {} if trace is not None else None
            f_p, e_cge, _ = self.cge(p_levels, f_depth, trace=sub)
            if e_cge is not None:
                e_d = e_cge
            if trace is not None:
                trace["cge"] = sub
        elif self.arch.use_agr:
            p_levels = self.pvt(image)
            f_p = self.fp_proj(p_levels[3])

        if self.arch.use_agr:
            s4 = s_levels[3]
            if self.ssag is not None:
                sub = {} if trace is not None else None
                f4_int = self.ssag(f_p, s4, trace=sub)
                if trace is not None:
                    trace["ssag"] = sub
            else:
                f4_int = s4
            if isinstance(self.csp, CrossLevelPropagation):
                sub = {} if trace is not None else None
                inject = s4 if self.arch.csp == "direct" else None
                f1, f2, f3, f4 = self.csp(f4_int, s_levels[0], s_levels[1],
                                          s_levels[2], inject=inject, trace=sub)
                if trace is not None:
                    trace["csp"] = sub
            else:
                f1, f2, f3, f4 = self.csp(f4_int, s_levels[0], s_levels[1],
                                          s_levels[2])
        else:
            f1, f2, f3, f4 = [proj(m)
                              for proj, m in zip(self.plain_projs, s_levels)]

        p_m = self.decoder(f1, e_d if self.arch.use_depth else None, out_size)
        p2, p3, p4 = self.sides(f2, f3, f4, out_size)
        return p_m, (p2, p3, p4)


def build_model(cfg: RunConfig) -> CamoGraphNet:
    return CamoGraphNet(cfg)


def count_parameters(model: nn.Module, trainable_only=False) -> int:
    return sum(p.numel() for p in model.parameters()
               if not trainable_only or p.requires_grad)
