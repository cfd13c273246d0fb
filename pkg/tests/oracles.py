"""Slow, obviously-correct reference computations used only by the tests.

Nothing here imports the code under test.
"""

from __future__ import annotations

import cmath
import math
from collections import deque

import numpy as np


def dft_direct(x) -> np.ndarray:
    """O(T^2) sum X(k) = sum_t x(t) exp(-2 pi i k t / T)."""
    x = list(map(complex, x))
    T = len(x)
    return np.array([
        sum(x[t] * cmath.exp(-2j * math.pi * k * t / T) for t in range(T)) for k in range(T)
    ])


def flood_fill_components(mask: np.ndarray):
    """8-connected components by BFS, in row-major order of first pixel.

    Returns a list of (area, perimeter) where perimeter counts pixel edges
    touching background or the border.
    """
    h, w = mask.shape
    seen = np.zeros_like(mask, dtype=bool)
    out = []
    for y0 in range(h):
        for x0 in range(w):
            if not mask[y0, x0] or seen[y0, x0]:
                continue
            queue = deque([(y0, x0)])
            seen[y0, x0] = True
            area = perim = 0
            while queue:
                y, x = queue.popleft()
                area += 1
                for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                    ny, nx = y + dy, x + dx
                    if not (0 <= ny < h and 0 <= nx < w) or not mask[ny, nx]:
                        perim += 1
                for dy in (-1, 0, 1):
                    for dx in (-1, 0, 1):
                        ny, nx = y + dy, x + dx
                        if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and not seen[ny, nx]:
                            seen[ny, nx] = True
                            queue.append((ny, nx))
            out.append((area, perim))
    return out


def mlp_forward_naive(weights, biases, x):
    """Layer-by-layer scalar loops; tanh on hidden layers, identity on the output."""
    h = [float(v) for v in x]
    for li, (W, b) in enumerate(zip(weights, biases)):
        nxt = []
        for j in range(W.shape[1]):
            s = float(b[j])
            for i in range(W.shape[0]):
                s += h[i] * float(W[i, j])
            nxt.append(s if li == len(weights) - 1 else math.tanh(s))
        h = nxt
    return np.array(h)


def central_differences(f, params, step=1e-5):
    """Numerical gradient of scalar f() w.r.t. every entry of every array in params."""
    grads = []
    for p in params:
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + step
            up = f()
            p[idx] = orig - step
            down = f()
            p[idx] = orig
            g[idx] = (up - down) / (2 * step)
        grads.append(g)
    return grads


def relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-6) -> float:
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)))


def mean_std_two_pass(x: np.ndarray):
    """Column mean and population std with plain Python sums."""
    n = x.shape[0]
    means = [sum(float(v) for v in col) / n for col in x.T]
    stds = [math.sqrt(sum((float(v) - m) ** 2 for v in col) / n) for col, m in zip(x.T, means)]
    return np.array(means), np.array(stds)
