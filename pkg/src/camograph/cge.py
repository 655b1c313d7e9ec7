"""Cross-modal graph enhancement.

Projects the RGB pyramid and the depth feature into node sets, pools
each set by learned importance, runs typed attention over the unified
set, then unpools and reshapes back into an enhanced RGB source map and
an enhanced depth cue.
"""

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from .attention import MultiHeadSelfAttention
from .errors import ConfigurationError
from .graph_ops import (
    LEVEL_DEPTH,
    MODALITY_DEPTH,
    MODALITY_RGB,
    NodeSet,
    concat_nodes,
    nodes_to_map,
    project_to_nodes,
    topk_pool,
    unpool,
)

RGB_RATIOS = (0.2, 0.4, 0.6, 0.8)
DEPTH_RATIO = 0.5


class TypedAttentionLayer(nn.Module):
    """One round of modality-typed global message passing.

    Tag-0 nodes pass through the RGB map, tag-1 nodes through the depth
    map, then multi-head self-attention over the whole sequence with a
    residual back onto the untransformed input. `typed=False` shares a
    single map across both tags (the homogeneous-graph ablation).
    """

    def __init__(self, dim: int, heads: int, typed: bool = True):
        super().__init__()
        self.phi_rgb = nn.Linear(dim, dim)
        self.phi_depth = self.phi_rgb if not typed else nn.Linear(dim, dim)
        self.attn = MultiHeadSelfAttention(dim, heads)

    def forward(self, features: Tensor, modality: Tensor) -> Tensor:
        is_depth = (modality == MODALITY_DEPTH).view(1, -1, 1)
        z = torch.where(is_depth, self.phi_depth(features), self.phi_rgb(features))
        return features + self.attn(z)


def run_typed_attention(layers, ns: NodeSet) -> NodeSet:
    """Apply stacked typed-attention layers to a node set."""
    feats = ns.features
    for layer in layers:
        feats = layer(feats, ns.modality)
    return NodeSet(feats, ns.modality, ns.level, ns.spatial_shape)


class CrossModalGraphEnhancement(nn.Module):
    """Pool, unify, attend, restore.

    Args:
        rgb_channels: channel widths of the 4 incoming pyramid levels.
        depth_channels: channel width of the depth feature (None drops
            the depth path entirely).
        dim: node embedding width.
        heads: attention heads.
        rgb_ratios / depth_ratio: per-family pooling ratios.
        n_layers: stacked attention rounds (0 skips attention).
        typed: modality-specific linear maps vs one shared map.
        pooling: disable to run attention over every node.
        simple_fusion: bypass the graph entirely; concatenate projected
            maps at the coarsest resolution and fuse with a 1x1 conv.
        fp_mode: "aggregate" sums all enhanced levels at level-4
            resolution; "level4" takes the deepest enhanced map alone.
        unpool_fill: "passthrough" or "zeros".
    """

    def __init__(self, rgb_channels, depth_channels, dim, heads,
                 rgb_ratios=RGB_RATIOS, depth_ratio=DEPTH_RATIO, n_layers=1,
                 typed=True, pooling=True, simple_fusion=False,
                 fp_mode="aggregate", unpool_fill="passthrough"):
        super().__init__()
        if fp_mode not in ("aggregate", "level4"):
            raise ConfigurationError(f"unknown fp_mode '{fp_mode}'")
        self.dim = dim
        self.rgb_ratios = tuple(rgb_ratios)
        self.depth_ratio = depth_ratio
        self.pooling = pooling
        self.simple_fusion = simple_fusion
        self.fp_mode = fp_mode
        self.unpool_fill = unpool_fill
        self.has_depth = depth_channels is not None

        self.rgb_projs = nn.ModuleList(
            [nn.Conv2d(c, dim, kernel_size=1) for c in rgb_channels])
        if self.has_depth:
            self.depth_proj = nn.Conv2d(depth_channels, dim, kernel_size=1)

        if simple_fusion:
            n_in = 4 + (1 if self.has_depth else 0)
            self.fuse = nn.Conv2d(n_in * dim, dim, kernel_size=1)
            return

        self.rgb_thetas = nn.ParameterList(
            [nn.Parameter(torch.randn(dim) / dim ** 0.5) for _ in range(4)])
        if self.has_depth:
            self.depth_theta = nn.Parameter(torch.randn(dim) / dim ** 0.5)
        self.layers = nn.ModuleList(
            [TypedAttentionLayer(dim, heads, typed) for _ in range(n_layers)])
        if fp_mode == "aggregate":
            self.fp_projs = nn.ModuleList(
                [nn.Conv2d(dim, dim, kernel_size=1) for _ in range(4)])

    def _aggregate(self, enhanced_levels):
        target = enhanced_levels[3].shape[-2:]
        if self.fp_mode == "level4":
            return enhanced_levels[3]
        total = 0
        for proj, level in zip(self.fp_projs, enhanced_levels):
            m = level
            if m.shape[-2:] != target:
                m = F.interpolate(m, size=target, mode="bilinear", align_corners=False)
            total = total + proj(m)
        return total

    def forward(self, pyramid, f_depth, trace=None):
        """pyramid: 4 level maps; f_depth: [B, d_c, h, w] or None.

        Returns (f_p, e_d, enhanced_levels); e_d is None when the module
        was built without a depth path. A trace dict, when given, is
        filled with the live node counts for shape auditing.
        """
        if self.has_depth and f_depth is None:
            raise ConfigurationError("module was built with a depth path but got none")

        if self.simple_fusion:
            proj_levels = [proj(m) for proj, m in zip(self.rgb_projs, pyramid)]
            e_d = self.depth_proj(f_depth) if self.has_depth else None
            target = proj_levels[3].shape[-2:]
            pieces = [
                m if m.shape[-2:] == target
                else F.interpolate(m, size=target, mode="bilinear", align_corners=False)
                for m in proj_levels
            ]
            if e_d is not None:
                pieces.append(e_d)
            return self.fuse(torch.cat(pieces, dim=1)), e_d, proj_levels

        node_sets = [
            project_to_nodes(m, proj, MODALITY_RGB, level=i + 1)
            for i, (proj, m) in enumerate(zip(self.rgb_projs, pyramid))
        ]
        if self.has_depth:
            node_sets.append(project_to_nodes(
                f_depth, self.depth_proj, MODALITY_DEPTH, level=LEVEL_DEPTH))

        if self.pooling:
            thetas = list(self.rgb_thetas)
            ratios = list(self.rgb_ratios)
            if self.has_depth:
                thetas.append(self.depth_theta)
                ratios.append(self.depth_ratio)
            pooled, records = [], []
            for ns, r, theta in zip(node_sets, ratios, thetas):
                p, rec = topk_pool(ns, r, theta)
                pooled.append(p)
                records.append(rec)
        else:
            pooled, records = node_sets, [None] * len(node_sets)

        unified = concat_nodes(pooled)
        if trace is not None:
            trace["pooled_counts"] = [p.count for p in pooled]
            trace["unified_nodes"] = unified.count
            trace["unified_tags"] = unified.modality.clone()
        attended = run_typed_attention(self.layers, unified)

        # split back by the (shared) per-family counts
        counts = [p.count for p in pooled]
        parts = torch.split(attended.features, counts, dim=1)

        restored_maps = []
        for ns, rec, part, pooled_set in zip(node_sets, records, parts, pooled):
            out = NodeSet(part, pooled_set.modality, pooled_set.level, None)
            if rec is not None:
                out = unpool(out, rec, fill=self.unpool_fill)
            out.spatial_shape = ns.spatial_shape
            restored_maps.append(nodes_to_map(out))

        enhanced_levels = restored_maps[:4]
        e_d = restored_maps[4] if self.has_depth else None
        f_p = self._aggregate(enhanced_levels)
        return f_p, e_d, enhanced_levels

    def unified_count(self, pyramid_sizes, depth_size=None):
        """Closed-form unified node count for given level (H, W) sizes."""
        from .graph_ops import pool_size

        total = 0
        for r, (h, w) in zip(self.rgb_ratios, pyramid_sizes):
            total += pool_size(r, h * w) if self.pooling else h * w
        if self.has_depth and depth_size is not None:
            h, w = depth_size
            total += pool_size(self.depth_ratio, h * w) if self.pooling else h * w
        return total
