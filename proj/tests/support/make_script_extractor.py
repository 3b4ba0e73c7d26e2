"""Writes a tiny TorchScript feature network plus sidecar for the loader test."""
import json
import sys

import torch


class Tiny(torch.nn.Module):
    def __init__(self):
        super().__init__()
        self.conv = torch.nn.Conv2d(3, 16, 3, stride=2, padding=1)

    def forward(self, x: torch.Tensor, return_features: bool = False) -> torch.Tensor:
        h = torch.relu(self.conv(x)).mean(dim=(2, 3))
        if return_features:
            return h
        return h.sum(dim=1, keepdim=True)


torch.manual_seed(0)
out = sys.argv[1]
torch.jit.script(Tiny()).save(out)
with open(out + ".json", "w") as f:
    json.dump({"kind": "torchscript", "input_size": 32, "dim": 16, "normalization": "byte",
               "forward_kwargs": {"return_features": True}}, f)
