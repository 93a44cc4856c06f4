# spiralloc/nn/optim.py
import numpy as np


class Adam:
    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {name: np.zeros_like(value) for name, value in params.items()}
        self.v = {name: np.zeros_like(value) for name, value in params.items()}

    def step(self, grads):
        """Apply one update in place to the tracked parameter arrays."""
        self.step_count += 1
        correction1 = 1.0 - self.beta1 ** self.step_count
        correction2 = 1.0 - self.beta2 ** self.step_count
        for name, grad in grads.items():
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * grad
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * grad ** 2
            m_hat = self.m[name] / correction1
            v_hat = self.v[name] / correction2
            self.params[name] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def polyak_update(target, online, tau):
    """target <- (1 - tau) * target + tau * online, in place."""
    for name, value in online.items():
        target[name] *= 1.0 - tau
        target[name] += tau * value


def all_finite(*values):
    return all(np.all(np.isfinite(v)) for v in values)
