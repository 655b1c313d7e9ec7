"""Node projection, importance scoring, Top-K graph pooling and unpooling.

Shared machinery for the cross-modal enhancement and anchor refinement
stages. Feature maps are batched tensors [B, C, H, W]; node sets carry
their features as [B, N, d] with per-node modality/level tags shared
across the batch (tags are constant within any map-derived set, and
concatenation orders are identical for every batch element).
"""

from dataclasses import dataclass

import torch
from torch import Tensor, nn

from .errors import ConfigurationError, ContractError, DegenerateScorerError

MODALITY_RGB = 0
MODALITY_DEPTH = 1

# level tag used for depth-derived nodes (RGB levels are 1..4)
LEVEL_DEPTH = 0


@dataclass
class NodeSet:
    """Flattened node features with modality and origin bookkeeping.

    features      [B, N, d]
    modality      [N] long, 0 = RGB, 1 = depth
    level         [N] long, 1..4 for RGB pyramid levels, 0 for depth
    spatial_shape (H, W) of the originating map, or None for
                  concatenated sets that have no single origin
    """

    features: Tensor
    modality: Tensor
    level: Tensor
    spatial_shape: tuple | None

    @property
    def count(self):
        return self.features.shape[1]

    @property
    def dim(self):
        return self.features.shape[2]


@dataclass
class PoolRecord:
    """Everything needed to restore a pooled set to its original size.

    retained_indices  [B, k] long, strictly ascending per row
    original_count    node count before pooling
    original_features [B, N, d] pre-gating features
    """

    retained_indices: Tensor
    original_count: int
    original_features: Tensor


def map_to_nodes(fm: Tensor, modality: int, level: int) -> NodeSet:
    """Flatten a [B, C, H, W] map into row-major nodes [B, H*W, C]."""
    b, c, h, w = fm.shape
    feats = fm.permute(0, 2, 3, 1).reshape(b, h * w, c)
    dev = fm.device
    return NodeSet(
        features=feats,
        modality=torch.full((h * w,), modality, dtype=torch.long, device=dev),
        level=torch.full((h * w,), level, dtype=torch.long, device=dev),
        spatial_shape=(h, w),
    )


def project_to_nodes(fm: Tensor, proj: nn.Conv2d, modality: int = MODALITY_RGB,
                     level: int = 1) -> NodeSet:
    """Apply a 1x1 projection conv and flatten to a node set (row-major)."""
    return map_to_nodes(proj(fm), modality, level)


def nodes_to_map(ns: NodeSet) -> Tensor:
    """Row-major inverse of map flattening; requires count == H*W."""
    if ns.spatial_shape is None:
        raise ContractError("node set has no spatial shape to reshape to")
    h, w = ns.spatial_shape
    if ns.count != h * w:
        raise ContractError(f"{ns.count} nodes cannot fill a {h}x{w} map")
    b, n, d = ns.features.shape
    return ns.features.reshape(b, h, w, d).permute(0, 3, 1, 2)


def score_nodes(features: Tensor, theta: Tensor) -> Tensor:
    """Importance score per node: s_i = <x_i, theta> / ||theta||_2.

    features [B, N, d], theta [d] -> scores [B, N].
    """
    norm = torch.linalg.vector_norm(theta)
    if float(norm.detach()) == 0.0:
        raise DegenerateScorerError("scoring weights have zero norm")
    return features @ (theta / norm)


def pool_size(ratio: float, count: int) -> int:
    """Retained node count: k = max(1, ceil(ratio * count))."""
    import math

    return max(1, math.ceil(ratio * count))


def _uniform_tag(tag: Tensor, name: str) -> None:
    if tag.numel() and not bool((tag == tag[0]).all()):
        raise ContractError(f"topk_pool requires a single-family set ({name} tags differ)")


def topk_pool(ns: NodeSet, ratio: float, theta: Tensor):
    """Retain the k = max(1, ceil(r*N)) highest-scoring nodes.

    Retained features are gated by tanh(score) so the scorer receives
    gradient. Ties break toward the lower index. Returns the pooled set
    (nodes kept in ascending original-index order) and a PoolRecord
    holding the ascending retained indices plus the pre-gating features.
    """
    if not 0.0 < ratio <= 1.0:
        raise ConfigurationError(f"pooling ratio {ratio} outside (0, 1]")
    _uniform_tag(ns.modality, "modality")
    _uniform_tag(ns.level, "level")

    n = ns.count
    k = pool_size(ratio, n)
    scores = score_nodes(ns.features, theta)  # [B, N]

    # stable descending sort keeps the lower index first on score ties
    order = torch.argsort(scores, dim=1, descending=True, stable=True)
    retained = order[:, :k].sort(dim=1).values  # [B, k] ascending

    gathered = torch.gather(ns.features, 1, retained.unsqueeze(-1).expand(-1, -1, ns.dim))
    gathered_scores = torch.gather(scores, 1, retained)
    pooled_feats = gathered * torch.tanh(gathered_scores).unsqueeze(-1)

    pooled = NodeSet(
        features=pooled_feats,
        modality=ns.modality[:k],
        level=ns.level[:k],
        spatial_shape=None,
    )
    record = PoolRecord(
        retained_indices=retained,
        original_count=n,
        original_features=ns.features,
    )
    return pooled, record


def unpool(pooled: NodeSet, record: PoolRecord, fill: str = "passthrough") -> NodeSet:
    """Place pooled features back at their original indices.

    Dropped slots carry the pre-pooling features ("passthrough", default)
    or zeros ("zeros").
    """
    k = record.retained_indices.shape[1]
    if pooled.count != k:
        raise ContractError(
            f"pooled count {pooled.count} != retained index count {k}")
    if fill == "passthrough":
        base = record.original_features
    elif fill == "zeros":
        base = torch.zeros_like(record.original_features)
    else:
        raise ConfigurationError(f"unknown unpool fill mode '{fill}'")

    idx = record.retained_indices.unsqueeze(-1).expand(-1, -1, pooled.dim)
    restored = base.scatter(1, idx, pooled.features)

    n = record.original_count
    dev = restored.device
    modality = torch.full((n,), int(pooled.modality[0]) if k else MODALITY_RGB,
                          dtype=torch.long, device=dev)
    level = torch.full((n,), int(pooled.level[0]) if k else 1,
                       dtype=torch.long, device=dev)
    return NodeSet(features=restored, modality=modality, level=level,
                   spatial_shape=None)


def concat_nodes(sets) -> NodeSet:
    """Concatenate node sets along the node axis, keeping per-node tags."""
    sets = list(sets)
    if not sets:
        raise ContractError("cannot concatenate zero node sets")
    dim = sets[0].dim
    for ns in sets:
        if ns.dim != dim:
            raise ContractError(f"node dim mismatch: {ns.dim} != {dim}")
        if ns.count < 1:
            raise ContractError("cannot concatenate an empty node set")
    return NodeSet(
        features=torch.cat([ns.features for ns in sets], dim=1),
        modality=torch.cat([ns.modality for ns in sets]),
        level=torch.cat([ns.level for ns in sets]),
        spatial_shape=None,
    )
