"""Anchor-guided refinement.

Stage one (anchor generation) fuses the enhanced RGB source with the
deepest SAM-stub feature over a pooled joint node set and adds the
result back residually, forging the global anchor. Stage two
(cross-level propagation) broadcasts that anchor down the hierarchy
through directed convolution+upsampling edges and per-level fusion.
"""

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from .attention import MultiHeadSelfAttention
from .errors import ConfigurationError, ContractError
from .graph_ops import (
    MODALITY_RGB,
    NodeSet,
    concat_nodes,
    map_to_nodes,
    nodes_to_map,
    topk_pool,
    unpool,
)

SSAG_RATIO = 0.7


class AnchorGeneration(nn.Module):
    """Joint node set over (F_p, S_4) -> pooled attention -> residual anchor.

    The joint ordering is [F_p nodes, S_4 nodes]; after unpooling, the
    S_4-position subset is reshaped and added to S_4 itself, so the
    deepest SAM feature's channel width must equal the embedding dim.
    """

    def __init__(self, fp_channels, s4_channels, dim, heads,
                 ratio=SSAG_RATIO, pooling=True, attention=True,
                 unpool_fill="passthrough"):
        super().__init__()
        if s4_channels != dim:
            raise ConfigurationError(
                f"anchor residual needs s4 channels == dim ({s4_channels} != {dim})")
        if not 0.0 < ratio <= 1.0:
            raise ConfigurationError(f"pooling ratio {ratio} outside (0, 1]")
        self.dim = dim
        self.ratio = ratio
        self.pooling = pooling
        self.attention = attention
        self.unpool_fill = unpool_fill
        self.proj_fp = nn.Conv2d(fp_channels, dim, kernel_size=1)
        self.proj_s4 = nn.Conv2d(s4_channels, dim, kernel_size=1)
        self.theta = nn.Parameter(torch.randn(dim) / dim ** 0.5)
        self.attn = MultiHeadSelfAttention(dim, heads) if attention else None

    def zero_projection_init_(self):
        """Zero both node projections (residual-identity testing hook)."""
        for conv in (self.proj_fp, self.proj_s4):
            nn.init.zeros_(conv.weight)
            nn.init.zeros_(conv.bias)
        return self

    def forward(self, f_p: Tensor, s4: Tensor, trace=None) -> Tensor:
        if f_p.shape[-2:] != s4.shape[-2:]:
            raise ContractError(
                f"anchor inputs disagree spatially: {tuple(f_p.shape[-2:])} vs "
                f"{tuple(s4.shape[-2:])}")
        h, w = s4.shape[-2:]
        g_fp = map_to_nodes(self.proj_fp(f_p), MODALITY_RGB, level=4)
        g_s4 = map_to_nodes(self.proj_s4(s4), MODALITY_RGB, level=4)
        joint = concat_nodes([g_fp, g_s4])

        if self.pooling:
            pooled, record = topk_pool(joint, self.ratio, self.theta)
        else:
            pooled, record = joint, None
        if trace is not None:
            trace["joint_nodes"] = joint.count
            trace["ssag_k"] = pooled.count

        # attention output replaces the pooled features; the only residual
        # in this stage is the final addition onto s4
        feats = pooled.features
        if self.attn is not None:
            feats = self.attn(feats)
        refined = NodeSet(feats, pooled.modality, pooled.level, None)

        if record is not None:
            restored = unpool(refined, record, fill=self.unpool_fill)
        else:
            restored = refined

        # subset at the S_4 positions of the joint ordering
        s_feat = NodeSet(restored.features[:, g_fp.count:], g_s4.modality,
                         g_s4.level, (h, w))
        return nodes_to_map(s_feat) + s4

    def joint_pool_size(self, level4_hw):
        from .graph_ops import pool_size

        h, w = level4_hw
        n = 2 * h * w
        return pool_size(self.ratio, n) if self.pooling else n


def _upsample_steps(x: Tensor, steps: int) -> Tensor:
    for _ in range(steps):
        x = F.interpolate(x, scale_factor=2, mode="bilinear", align_corners=False)
    return x


# directed top-down edges (source level, target level)
EDGES = ((4, 3), (4, 2), (4, 1), (3, 2), (3, 1), (2, 1))


def _fusion_block(in_ch, out_ch):
    return nn.Sequential(
        nn.Conv2d(in_ch, out_ch, kernel_size=3, padding=1),
        nn.ReLU(inplace=True),
        nn.Conv2d(out_ch, out_ch, kernel_size=3, padding=1),
    )


class CrossLevelPropagation(nn.Module):
    """Broadcast the anchor through direct top-down message edges.

    mode "full":     node projections, six conv+upsample edges, fusion.
    mode "no_edges": node projections and fusion only (no messages).
    mode "direct":   no node projections; each level fuses its raw
                     input with a plainly-upsampled deep feature (the
                     `inject` argument, or the anchor when absent).
    The top level always passes the anchor through untouched.
    """

    def __init__(self, s_channels, dim, mode="full"):
        super().__init__()
        if mode not in ("full", "no_edges", "direct"):
            raise ConfigurationError(f"unknown propagation mode '{mode}'")
        self.mode = mode
        self.dim = dim

        if mode == "direct":
            self.fusions = nn.ModuleList([
                _fusion_block(c + dim, dim) for c in s_channels])
            return

        self.node_projs = nn.ModuleList(
            [nn.Conv2d(c, dim, kernel_size=1) for c in s_channels]
            + [nn.Conv2d(dim, dim, kernel_size=1)])
        if mode == "full":
            self.edge_convs = nn.ModuleDict({
                f"{src}to{dst}": nn.Conv2d(dim, dim, kernel_size=1)
                for src, dst in EDGES
            })
        incoming = {1: 3, 2: 2, 3: 1} if mode == "full" else {1: 0, 2: 0, 3: 0}
        self.fusions = nn.ModuleList([
            _fusion_block((1 + incoming[lvl]) * dim, dim) for lvl in (1, 2, 3)])

    def edge_messages(self, nodes):
        """nodes: dict level -> [B, d, H, W]; returns dict (src, dst) -> map."""
        messages = {}
        for src, dst in EDGES:
            m = self.edge_convs[f"{src}to{dst}"](nodes[src])
            messages[(src, dst)] = _upsample_steps(m, src - dst)
        return messages

    def forward(self, f4_int: Tensor, s1: Tensor, s2: Tensor, s3: Tensor,
                inject: Tensor = None, trace=None):
        shallow = {1: s1, 2: s2, 3: s3}
        for lvl in (1, 2, 3):
            expect = f4_int.shape[-1] * 2 ** (4 - lvl)
            if shallow[lvl].shape[-1] != expect:
                raise ContractError(
                    f"level {lvl} size {shallow[lvl].shape[-1]} != expected {expect}")

        if self.mode == "direct":
            source = f4_int if inject is None else inject
            outs = []
            for lvl in (1, 2, 3):
                anchor = _upsample_steps(source, 4 - lvl)
                outs.append(self.fusions[lvl - 1](
                    torch.cat([shallow[lvl], anchor], dim=1)))
            return outs[0], outs[1], outs[2], f4_int

        nodes = {lvl: self.node_projs[lvl - 1](shallow[lvl]) for lvl in (1, 2, 3)}
        nodes[4] = self.node_projs[3](f4_int)

        if self.mode == "full":
            msg = self.edge_messages(nodes)
            if trace is not None:
                trace["messages"] = {
                    key: tuple(m.shape[-2:]) for key, m in msg.items()}
            f1 = self.fusions[0](torch.cat(
                [nodes[1], msg[(2, 1)], msg[(3, 1)], msg[(4, 1)]], dim=1))
            f2 = self.fusions[1](torch.cat([nodes[2], msg[(3, 2)], msg[(4, 2)]], dim=1))
            f3 = self.fusions[2](torch.cat([nodes[3], msg[(4, 3)]], dim=1))
        else:
            f1 = self.fusions[0](nodes[1])
            f2 = self.fusions[1](nodes[2])
            f3 = self.fusions[2](nodes[3])
        return f1, f2, f3, f4_int


class LevelProjections(nn.Module):
    """Fallback for the no-propagation ablation: per-level 1x1 maps only."""

    def __init__(self, s_channels, dim):
        super().__init__()
        self.projs = nn.ModuleList(
            [nn.Conv2d(c, dim, kernel_size=1) for c in s_channels])

    def forward(self, f4_int, s1, s2, s3):
        return (self.projs[0](s1), self.projs[1](s2), self.projs[2](s3), f4_int)
