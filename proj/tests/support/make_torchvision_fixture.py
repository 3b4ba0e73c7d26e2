"""Writes randomly initialised torchvision classifiers as plain state dicts,
plus a probe input and the reference logits for each."""
import os
import sys

import torch

try:
    import torchvision
except ImportError:  # the C++ test skips when the directory stays empty
    sys.exit(0)

out = sys.argv[1]
os.makedirs(out, exist_ok=True)
mean = torch.tensor([0.485, 0.456, 0.406]).view(1, 3, 1, 1)
std = torch.tensor([0.229, 0.224, 0.225]).view(1, 3, 1, 1)

for name, ctor in [("SQUEEZENET", torchvision.models.squeezenet1_1),
                   ("ALEXNET", torchvision.models.alexnet),
                   ("RESNET18", torchvision.models.resnet18)]:
    torch.manual_seed(0)
    model = ctor(weights=None)
    # Non-trivial running statistics so buffers are exercised too.
    for m in model.modules():
        if isinstance(m, torch.nn.BatchNorm2d):
            m.running_mean.uniform_(-0.2, 0.2)
            m.running_var.uniform_(0.5, 1.5)
    model.eval()
    x = torch.rand(2, 3, 96, 96) * 2 - 1
    with torch.no_grad():
        logits = model(((x + 1) / 2 - mean) / std)
    torch.save(dict(model.state_dict()), os.path.join(out, name + ".pt"))
    torch.save({"x": x, "logits": logits}, os.path.join(out, name + "_probe.pt"))
