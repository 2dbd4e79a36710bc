"""Per-level U-net stacks predicting normalized corrections from the
nodal input fields (kappa, forcing, obstacle).

The grids are nested with n_fine = 2 n_coarse - 1, so a stride-2
convolution with kernel 3 and padding 1 maps a level-l grid exactly onto
the level-(l-1) grid, and its transpose maps back; a U-net's downsampling
depth on level l is therefore capped at l - 1 (it cannot descend past the
coarsest grid)."""

from dataclasses import dataclass, field

import torch
from torch import nn

ACTIVATIONS = {
    "softplus": nn.Softplus,
    "selu": nn.SELU,
    "elu": nn.ELU,
}


@dataclass(frozen=True)
class ModelSpec:
    levels: int
    unets_per_level: tuple = ()   # default derived: more U-nets on coarse levels
    width: int = 16
    activation: str = "softplus"

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}; "
                             f"choose from {sorted(ACTIVATIONS)}")
        if not self.unets_per_level:
            object.__setattr__(self, "unets_per_level",
                               default_unet_counts(self.levels))
        if len(self.unets_per_level) != self.levels:
            raise ValueError("unets_per_level must list one count per level")
        if min(self.unets_per_level) < 1:
            raise ValueError("every level needs at least one U-net")

    def to_json(self) -> dict:
        return {"levels": self.levels,
                "unets_per_level": list(self.unets_per_level),
                "width": self.width, "activation": self.activation}

    @classmethod
    def from_json(cls, d: dict) -> "ModelSpec":
        return cls(levels=int(d["levels"]),
                   unets_per_level=tuple(d["unets_per_level"]),
                   width=int(d["width"]), activation=d["activation"])


def default_unet_counts(levels: int) -> tuple:
    """Decreasing counts toward fine levels (coarse corrections carry the
    most structure per dof): 4, 2, then 1 everywhere finer."""
    base = [4, 2] + [1] * max(0, levels - 2)
    return tuple(base[:levels])


def _conv(cin, cout, act):
    return nn.Sequential(nn.Conv2d(cin, cout, 3, padding=1), act())


class UNet(nn.Module):
    """Symmetric encoder/decoder with skip connections; depth counts the
    number of stride-2 downsamplings."""

    def __init__(self, channels: int, depth: int, act):
        super().__init__()
        if depth < 0:
            raise ValueError("depth must be >= 0")
        self.depth = depth
        self.pre = _conv(channels, channels, act)
        self.down = nn.ModuleList(
            [nn.Sequential(nn.Conv2d(channels, channels, 3, stride=2,
                                     padding=1), act())
             for _ in range(depth)])
        self.bottom = _conv(channels, channels, act)
        self.up = nn.ModuleList(
            [nn.Sequential(nn.ConvTranspose2d(channels, channels, 3,
                                              stride=2, padding=1), act())
             for _ in range(depth)])
        self.merge = nn.ModuleList(
            [_conv(2 * channels, channels, act) for _ in range(depth)])

    def forward(self, x):
        x = self.pre(x)
        skips = []
        for down in self.down:
            skips.append(x)
            x = down(x)
        x = self.bottom(x)
        for up, merge in zip(self.up, self.merge):
            x = up(x)
            x = merge(torch.cat([x, skips.pop()], dim=1))
        return x


class LevelModel(nn.Module):
    """Stack of U-nets for one grid level; residual accumulation with a
    zero-initialized head so an untrained model predicts exactly zero."""

    def __init__(self, level: int, count: int, width: int, act):
        super().__init__()
        self.level = level
        depth = level - 1  # downsampling cannot pass the coarsest grid
        self.lift = nn.Conv2d(3, width, 3, padding=1)
        self.unets = nn.ModuleList(
            [UNet(width, depth, act) for _ in range(count)])
        self.head = nn.Conv2d(width, 1, 3, padding=1)
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)

    def forward(self, x):
        z = self.lift(x)
        for unet in self.unets:
            z = z + unet(z)
        out = self.head(z).squeeze(1)
        # predictions are interior corrections; the boundary stays zero
        mask = torch.zeros_like(out)
        mask[..., 1:-1, 1:-1] = 1.0
        return out * mask


class MultilevelModel(nn.Module):
    def __init__(self, spec: ModelSpec):
        super().__init__()
        self.spec = spec
        act = ACTIVATIONS[spec.activation]
        self.levels = nn.ModuleList(
            [LevelModel(lvl, spec.unets_per_level[lvl - 1], spec.width, act)
             for lvl in range(1, spec.levels + 1)])

    def level(self, lvl: int) -> LevelModel:
        return self.levels[lvl - 1]

    def max_downsampling_depth(self, lvl: int) -> int:
        """Largest downsampling depth present in the level's graph."""
        return max(unet.depth for unet in self.level(lvl).unets)
