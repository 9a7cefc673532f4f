"""Build the committed MNIST fixture and the reference CNN checkpoint.

Input: the 5000-image MNIST sample bundled with mlxtend (500 images per class).
Output (written to crates/core/data/):
  mnist-1k-images-idx3-ubyte   1000 held-out test images (100 per class)
  mnist-1k-labels-idx1-ubyte   matching labels
  cnn.amcw                     trained weights in the flat little-endian format

The remaining 4000 images are used for training. Every layer fits in a single
128x128 array: conv 1->4 (5x5), conv 4->8 (5x5), fc 128->64, fc 64->10.
"""
import gzip
import io
import os
import struct
import sys
import zipfile

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

SEED = 20240601
OUT = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "data")


def load_mnist_5k(wheel):
    z = zipfile.ZipFile(wheel)
    raw = gzip.decompress(z.read("mlxtend/data/data/mnist_5k.csv.gz"))
    d = np.loadtxt(io.BytesIO(raw), delimiter=",")
    return d[:, :-1].astype(np.uint8), d[:, -1].astype(np.uint8)


class Net(nn.Module):
    def __init__(self):
        super().__init__()
        self.c1 = nn.Conv2d(1, 4, 5)
        self.c2 = nn.Conv2d(4, 8, 5)
        self.f1 = nn.Linear(128, 64)
        self.f2 = nn.Linear(64, 10)

    def forward(self, x, trace=None):
        layers = [self.c1, self.c2, self.f1, self.f2]
        for i, layer in enumerate(layers):
            if i == 2:
                x = x.flatten(1)
            if trace is not None:
                trace.append((x.abs().amax().item(), (layer(x) - layer.bias.view(
                    (1, -1) + (1,) * (x.dim() - 2))).abs().amax().item()))
            x = layer(x)
            if i < 2:
                x = F.max_pool2d(F.relu(x), 2)
            elif i < 3:
                x = F.relu(x)
        return x


def shift(x, rng):
    dx, dy = rng.integers(-2, 3, size=2)
    return torch.roll(x, shifts=(int(dy), int(dx)), dims=(2, 3))


def main():
    wheel = sys.argv[1]
    torch.manual_seed(SEED)
    rng = np.random.default_rng(SEED)
    images, labels = load_mnist_5k(wheel)
    test_idx = np.concatenate([rng.permutation(np.flatnonzero(labels == k))[:100] for k in range(10)])
    test_idx = rng.permutation(test_idx)
    train_mask = np.ones(len(labels), bool)
    train_mask[test_idx] = False

    xtr = torch.tensor(images[train_mask], dtype=torch.float32).view(-1, 1, 28, 28) / 255.0
    ytr = torch.tensor(labels[train_mask], dtype=torch.long)
    xte = torch.tensor(images[test_idx], dtype=torch.float32).view(-1, 1, 28, 28) / 255.0
    yte = torch.tensor(labels[test_idx], dtype=torch.long)

    net = Net()
    opt = torch.optim.Adam(net.parameters(), lr=2e-3)
    sched = torch.optim.lr_scheduler.StepLR(opt, 20, 0.3)
    for epoch in range(60):
        net.train()
        perm = torch.randperm(len(xtr))
        for i in range(0, len(xtr), 64):
            b = perm[i:i + 64]
            loss = F.cross_entropy(net(shift(xtr[b], rng)), ytr[b])
            opt.zero_grad()
            loss.backward()
            opt.step()
        sched.step()
        net.eval()
        with torch.no_grad():
            acc = (net(xte).argmax(1) == yte).float().mean().item()
        print(f"epoch {epoch} loss {loss.item():.4f} test acc {acc:.4f}")

    with torch.no_grad():
        trace = []
        net(xtr, trace)

    os.makedirs(OUT, exist_ok=True)
    with open(os.path.join(OUT, "mnist-1k-images-idx3-ubyte"), "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(test_idx), 28, 28))
        f.write(images[test_idx].tobytes())
    with open(os.path.join(OUT, "mnist-1k-labels-idx1-ubyte"), "wb") as f:
        f.write(struct.pack(">II", 0x801, len(test_idx)))
        f.write(labels[test_idx].tobytes())

    with open(os.path.join(OUT, "cnn.amcw"), "wb") as f:
        f.write(b"AMCW")
        f.write(struct.pack("<II", 1, 4))
        for layer, (in_range, out_range) in zip([net.c1, net.c2, net.f1, net.f2], trace):
            w = layer.weight.detach().numpy().astype("<f4")
            if w.ndim == 4:
                kind, (o, i, kh, kw) = 0, w.shape
            else:
                kind, (o, i), kh, kw = 1, w.shape, 1, 1
            f.write(struct.pack("<IIIII", kind, o, i, kh, kw))
            f.write(struct.pack("<ff", in_range, out_range))
            f.write(w.tobytes())
            f.write(layer.bias.detach().numpy().astype("<f4").tobytes())
    print("ranges", trace)


if __name__ == "__main__":
    main()
