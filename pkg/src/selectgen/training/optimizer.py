"""Adam with elementwise gradient clipping and L2 weight decay.

Each parameter keeps its own step counter, so partitions that only train in
one phase get correct bias correction.  Updates only touch parameters that
actually received a gradient.
"""

from __future__ import annotations

import numpy as np

from ..autodiff import GradientMap, Parameter
from .config import OptimizerConfig


class Adam:
    def __init__(self, params: dict[str, Parameter], cfg: OptimizerConfig):
        self.params = params
        self.cfg = cfg
        self._m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self._v = {k: np.zeros_like(p.data) for k, p in params.items()}
        self._t = {k: 0 for k in params}

    def reset_state(self) -> None:
        """Drop moment estimates and per-parameter step counts.

        Used when the objective changes shape mid-run: second moments
        calibrated to the old gradient scale would turn the first updates
        of the new phase into steps far larger than the learning rate.
        """
        for k in self.params:
            self._m[k][...] = 0.0
            self._v[k][...] = 0.0
            self._t[k] = 0

    def step(self, grads: GradientMap) -> None:
        c = self.cfg
        for name, g in grads.items():
            p = self.params[name]
            g = np.clip(g, -c.grad_clip, c.grad_clip)
            if c.weight_decay > 0.0:
                g = g + c.weight_decay * p.data
            self._t[name] += 1
            t = self._t[name]
            m = self._m[name] = c.beta1 * self._m[name] + (1 - c.beta1) * g
            v = self._v[name] = c.beta2 * self._v[name] + (1 - c.beta2) * g * g
            m_hat = m / (1 - c.beta1**t)
            v_hat = v / (1 - c.beta2**t)
            p.data = p.data - c.lr * m_hat / (np.sqrt(v_hat) + c.eps)
