"""Multi-head self-attention over node sequences.

Written out by hand (rather than nn.MultiheadAttention) so tests can
zero the output projection for residual-identity checks and run the
block in float64 for finite-difference verification. No positional
encoding anywhere: node order must not matter, which makes permutation
equivariance a checkable property.
"""

import math

import torch
from torch import Tensor, nn

from .errors import ConfigurationError


class MultiHeadSelfAttention(nn.Module):
    def __init__(self, dim: int, heads: int):
        super().__init__()
        if dim % heads != 0:
            raise ConfigurationError(f"dim {dim} not divisible by heads {heads}")
        self.dim = dim
        self.heads = heads
        self.head_dim = dim // heads
        self.qkv = nn.Linear(dim, 3 * dim)
        self.out = nn.Linear(dim, dim)

    def zero_output_init_(self):
        """Zero the output projection so the block contributes nothing."""
        nn.init.zeros_(self.out.weight)
        nn.init.zeros_(self.out.bias)
        return self

    def forward(self, x: Tensor) -> Tensor:
        """x [B, N, dim] -> [B, N, dim]."""
        b, n, _ = x.shape
        q, k, v = self.qkv(x).chunk(3, dim=-1)

        def split(t):
            return t.reshape(b, n, self.heads, self.head_dim).transpose(1, 2)

        q, k, v = split(q), split(k), split(v)
        attn = torch.softmax(q @ k.transpose(-1, -2) / math.sqrt(self.head_dim), dim=-1)
        y = (attn @ v).transpose(1, 2).reshape(b, n, self.dim)
        return self.out(y)
