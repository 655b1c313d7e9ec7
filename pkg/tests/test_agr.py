import numpy as np
import pytest
import torch

from camograph.agr import (
    EDGES,
    AnchorGeneration,
    CrossLevelPropagation,
    LevelProjections,
)
from camograph.errors import ConfigurationError, ContractError


def maps(rng, spec):
    return [torch.from_numpy(rng.standard_normal((1, c, s, s))).float()
            for c, s in spec]


def test_joint_pool_arithmetic():
    torch.manual_seed(0)
    ssag = AnchorGeneration(8, 8, 8, 2)
    assert ssag.joint_pool_size((4, 4)) == 23  # ceil(0.7 * 32)
    rng = np.random.default_rng(0)
    f_p, s4 = maps(rng, [(8, 4), (8, 4)])
    trace = {}
    ssag(f_p, s4, trace=trace)
    assert trace["joint_nodes"] == 32
    assert trace["ssag_k"] == 23


def test_zero_init_reduces_to_s4():
    torch.manual_seed(1)
    rng = np.random.default_rng(1)
    ssag = AnchorGeneration(8, 8, 8, 2)
    ssag.zero_projection_init_()
    ssag.attn.zero_output_init_()
    f_p, s4 = maps(rng, [(8, 4), (8, 4)])
    out = ssag(f_p, s4)
    assert (out - s4).abs().max().item() < 1e-12


def test_spatial_mismatch_rejected():
    torch.manual_seed(2)
    ssag = AnchorGeneration(8, 8, 8, 2)
    rng = np.random.default_rng(2)
    f_p, s4 = maps(rng, [(8, 4), (8, 8)])
    with pytest.raises(ContractError):
        ssag(f_p, s4)


def test_s4_channel_width_must_match_dim():
    with pytest.raises(ConfigurationError):
        AnchorGeneration(8, 16, 8, 2)
    with pytest.raises(ConfigurationError):
        AnchorGeneration(8, 8, 8, 2, ratio=1.5)


def test_no_pooling_no_attention_paths():
    torch.manual_seed(3)
    rng = np.random.default_rng(3)
    f_p, s4 = maps(rng, [(8, 2), (8, 2)])
    plain = AnchorGeneration(8, 8, 8, 2, pooling=False)
    trace = {}
    plain(f_p, s4, trace=trace)
    assert trace["ssag_k"] == trace["joint_nodes"] == 8

    no_att = AnchorGeneration(8, 8, 8, 2, attention=False)
    assert no_att.attn is None
    out = no_att(f_p, s4)
    assert tuple(out.shape) == (1, 8, 2, 2)


def test_edge_message_sizes():
    torch.manual_seed(4)
    csp = CrossLevelPropagation((4, 4, 8), 8, mode="full")
    rng = np.random.default_rng(4)
    f4, s1, s2, s3 = maps(rng, [(8, 4), (4, 32), (4, 16), (8, 8)])
    trace = {}
    csp(f4, s1, s2, s3, trace=trace)
    # three doublings lift the 4x4 anchor to level 1's 32x32
    assert trace["messages"][(4, 1)] == (32, 32)
    assert trace["messages"][(4, 2)] == (16, 16)
    assert trace["messages"][(4, 3)] == (8, 8)
    assert trace["messages"][(3, 2)] == (16, 16)
    assert trace["messages"][(3, 1)] == (32, 32)
    assert trace["messages"][(2, 1)] == (32, 32)
    assert set(trace["messages"]) == set(EDGES)


def test_bilinear_upsampling_preserves_constants():
    torch.manual_seed(5)
    csp = CrossLevelPropagation((4, 4, 8), 8, mode="full")
    nodes = {lvl: torch.full((1, 8, s, s), 0.37)
             for lvl, s in ((2, 16), (3, 8), (4, 4))}
    msg = csp.edge_messages(nodes)
    for m in msg.values():
        # a 1x1 conv of a constant map is constant per channel, and the
        # bilinear upsampling must keep it that way
        spread = (m - m.mean(dim=(-1, -2), keepdim=True)).abs().max()
        assert spread.item() < 1e-6


def test_fusion_one_input_width():
    csp = CrossLevelPropagation((4, 4, 8), 8, mode="full")
    assert csp.fusions[0][0].in_channels == 4 * 8
    assert csp.fusions[1][0].in_channels == 3 * 8
    assert csp.fusions[2][0].in_channels == 2 * 8


def test_f4_passes_through_bitwise():
    torch.manual_seed(6)
    rng = np.random.default_rng(6)
    f4, s1, s2, s3 = maps(rng, [(8, 2), (4, 16), (4, 8), (8, 4)])
    for mode in ("full", "no_edges", "direct"):
        csp = CrossLevelPropagation((4, 4, 8), 8, mode=mode)
        _, _, _, out4 = csp(f4, s1, s2, s3)
        assert out4 is f4
    plain = LevelProjections((4, 4, 8), 8)
    assert plain(f4, s1, s2, s3)[3] is f4


def test_level_size_contract():
    torch.manual_seed(7)
    csp = CrossLevelPropagation((4, 4, 8), 8, mode="full")
    rng = np.random.default_rng(7)
    f4, s1, s2, s3 = maps(rng, [(8, 2), (4, 16), (4, 8), (8, 8)])
    with pytest.raises(ContractError):
        csp(f4, s1, s2, s3)
    with pytest.raises(ConfigurationError):
        CrossLevelPropagation((4, 4, 8), 8, mode="sideways")


def test_anchor_reaches_level_one_only_through_its_edge():
    torch.manual_seed(8)
    rng = np.random.default_rng(8)
    csp = CrossLevelPropagation((4, 4, 8), 8, mode="full")
    f4a, s1, s2, s3 = maps(rng, [(8, 2), (4, 16), (4, 8), (8, 4)])
    f4b = f4a + torch.from_numpy(rng.standard_normal(f4a.shape)).float()

    f1_a = csp(f4a, s1, s2, s3)[0]
    f1_b = csp(f4b, s1, s2, s3)[0]
    assert not torch.equal(f1_a, f1_b)

    with torch.no_grad():
        csp.edge_convs["4to1"].weight.zero_()
        csp.edge_convs["4to1"].bias.zero_()
    f1_a = csp(f4a, s1, s2, s3)[0]
    f1_b = csp(f4b, s1, s2, s3)[0]
    # levels 1..3 come from s1..s3, so cutting the 4->1 edge makes F1
    # blind to the anchor entirely
    assert torch.equal(f1_a, f1_b)


def test_direct_mode_uses_injected_source():
    torch.manual_seed(9)
    rng = np.random.default_rng(9)
    csp = CrossLevelPropagation((4, 4, 8), 8, mode="direct")
    f4, s1, s2, s3 = maps(rng, [(8, 2), (4, 16), (4, 8), (8, 4)])
    inject = torch.from_numpy(rng.standard_normal(f4.shape)).float()

    by_anchor = csp(f4, s1, s2, s3)
    by_inject = csp(f4, s1, s2, s3, inject=inject)
    assert not torch.equal(by_anchor[0], by_inject[0])
    assert torch.equal(by_inject[3], f4)

    # injected source is upsampled without any projection conv in front
    assert not hasattr(csp, "node_projs")
    assert not hasattr(csp, "edge_convs")
