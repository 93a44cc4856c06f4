# spiralloc/nn/layers.py
"""Small numpy layers with explicit forward caches and analytic backward passes."""
import copy
import math

import numpy as np


class Dense:
    def __init__(self, n_in, n_out, rng, activation="tanh"):
        limit = math.sqrt(6.0 / (n_in + n_out))
        self.activation = activation
        self.params = {
            "W": rng.uniform(-limit, limit, size=(n_in, n_out)),
            "b": np.zeros(n_out),
        }

    def forward(self, x):
        z = x @ self.params["W"] + self.params["b"]
        y = np.tanh(z) if self.activation == "tanh" else z
        return y, (x, y)

    def backward(self, grad_y, cache):
        x, y = cache
        grad_z = grad_y * (1.0 - y ** 2) if self.activation == "tanh" else grad_y
        grads = {"W": x.T @ grad_z, "b": grad_z.sum(axis=0)}
        return grad_z @ self.params["W"].T, grads


class Recurrent:
    """Elman cell, h_t = tanh(x_t W_x + h_{t-1} W_h + b), returning the last hidden state."""

    def __init__(self, n_in, hidden, rng):
        limit_x = math.sqrt(6.0 / (n_in + hidden))
        limit_h = math.sqrt(6.0 / (2 * hidden))
        self.hidden = hidden
        self.params = {
            "W_x": rng.uniform(-limit_x, limit_x, size=(n_in, hidden)),
            "W_h": rng.uniform(-limit_h, limit_h, size=(hidden, hidden)),
            "b": np.zeros(hidden),
        }

    def forward(self, seq):
        """
        Args:
            seq: Array (batch, steps, features)

        Returns:
            (last hidden state (batch, hidden), cache)
        """
        batch, steps, _ = seq.shape
        states = [np.zeros((batch, self.hidden))]
        for t in range(steps):
            z = seq[:, t, :] @ self.params["W_x"] + states[-1] @ self.params["W_h"] + self.params["b"]
            states.append(np.tanh(z))
        return states[-1], (seq, states)

    def backward(self, grad_h, cache):
        seq, states = cache
        grads = {name: np.zeros_like(value) for name, value in self.params.items()}
        grad_seq = np.zeros_like(seq)
        for t in reversed(range(seq.shape[1])):
            h = states[t + 1]
            grad_z = grad_h * (1.0 - h ** 2)
            grads["W_x"] += seq[:, t, :].T @ grad_z
            grads["W_h"] += states[t].T @ grad_z
            grads["b"] += grad_z.sum(axis=0)
            grad_seq[:, t, :] = grad_z @ self.params["W_x"].T
            grad_h = grad_z @ self.params["W_h"].T
        return grad_seq, grads


class Network:
    """Named layers with a flat ``layer.param`` view of their parameters."""

    def __init__(self, **layers):
        self.layers = layers

    def parameters(self):
        return {
            f"{layer_name}.{param_name}": value
            for layer_name, layer in self.layers.items()
            for param_name, value in layer.params.items()
        }

    def load_parameters(self, tensors):
        own = self.parameters()
        missing = set(own) - set(tensors)
        if missing:
            raise KeyError(f"missing tensors: {sorted(missing)}")
        for name, target in own.items():
            value = np.asarray(tensors[name], dtype=float)
            if value.shape != target.shape:
                raise ValueError(f"tensor {name} has shape {value.shape}, expected {target.shape}")
            target[...] = value

    def clone(self):
        return copy.deepcopy(self)

    @staticmethod
    def prefixed(grads_by_layer):
        return {
            f"{layer_name}.{param_name}": value
            for layer_name, grads in grads_by_layer.items()
            for param_name, value in grads.items()
        }
