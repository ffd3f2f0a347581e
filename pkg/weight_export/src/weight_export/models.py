"""Toy convolutional GAN for small grayscale images.

The generator upsamples a latent through two transposed convolutions to a
tanh image in [-1, 1]; the discriminator mirrors it with strided
convolutions. Sized for sides that are multiples of 4 (8 to 64 covers the
desk-scale datasets).
"""

from __future__ import annotations

import torch
from torch import nn


class ToyGenerator(nn.Module):
    def __init__(self, latent_dim: int, side: int, base_channels: int = 16):
        super().__init__()
        if side % 4 != 0 or side < 8:
            raise ValueError(f"side must be a multiple of 4 (>= 8), got {side}")
        self.latent_dim = latent_dim
        self.side = side
        s0 = side // 4
        c0 = 2 * base_channels
        self.s0 = s0
        self.c0 = c0
        self.fc = nn.Linear(latent_dim, c0 * s0 * s0)
        self.up1 = nn.ConvTranspose2d(c0, base_channels, 4, stride=2, padding=1)
        self.up2 = nn.ConvTranspose2d(base_channels, 1, 4, stride=2, padding=1)

    def forward(self, z):
        h = torch.relu(self.fc(z))
        h = h.reshape(-1, self.c0, self.s0, self.s0)
        h = torch.relu(self.up1(h))
        return torch.tanh(self.up2(h))

    def stages(self):
        """(module, input shape, activation tag) triples for lowering."""
        return [
            (self.fc, (self.latent_dim,), "relu"),
            (self.up1, (self.c0, self.s0, self.s0), "relu"),
            (self.up2, (self.c0 // 2, 2 * self.s0, 2 * self.s0), "tanh"),
        ]


class ToyDiscriminator(nn.Module):
    def __init__(self, side: int, base_channels: int = 16):
        super().__init__()
        s0 = side // 4
        self.net = nn.Sequential(
            nn.Conv2d(1, base_channels, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2),
            nn.Conv2d(base_channels, 2 * base_channels, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2),
            nn.Flatten(),
            nn.Linear(2 * base_channels * s0 * s0, 1),
        )

    def forward(self, img):
        return self.net(img)
