# spiralloc/agent/networks.py
"""Actor and critic networks over the recurrent state encoding."""
import numpy as np

from spiralloc.agent.state import ACTION_DIM, STATE_DIM
from spiralloc.nn.layers import Dense, Network, Recurrent

ENCODER_HIDDEN = 32
HEAD_HIDDEN = 64


class Actor:
    """pi(s): encoder -> dense -> dense -> tanh action in [-1, 1]^2."""

    def __init__(self, rng, encoder_hidden=ENCODER_HIDDEN, hidden=HEAD_HIDDEN,
                 state_dim=STATE_DIM, action_dim=ACTION_DIM):
        self.network = Network(
            encoder=Recurrent(state_dim, encoder_hidden, rng),
            fc1=Dense(encoder_hidden, hidden, rng),
            fc2=Dense(hidden, hidden, rng),
            out=Dense(hidden, action_dim, rng),
        )

    def forward(self, seq):
        """
        Args:
            seq: State histories, array (batch, steps, state_dim)

        Returns:
            (actions (batch, action_dim), cache)
        """
        layers = self.network.layers
        h, c_enc = layers["encoder"].forward(seq)
        h1, c1 = layers["fc1"].forward(h)
        h2, c2 = layers["fc2"].forward(h1)
        action, c3 = layers["out"].forward(h2)
        return action, (c_enc, c1, c2, c3)

    def backward(self, grad_action, cache):
        layers = self.network.layers
        c_enc, c1, c2, c3 = cache
        g, g_out = layers["out"].backward(grad_action, c3)
        g, g_fc2 = layers["fc2"].backward(g, c2)
        g, g_fc1 = layers["fc1"].backward(g, c1)
        _, g_enc = layers["encoder"].backward(g, c_enc)
        return Network.prefixed({"encoder": g_enc, "fc1": g_fc1, "fc2": g_fc2, "out": g_out})

    def __call__(self, seq):
        return self.forward(seq)[0]


class Critic:
    """Q(s, a): encoder, concatenated action, two dense layers and a linear output."""

    def __init__(self, rng, encoder_hidden=ENCODER_HIDDEN, hidden=HEAD_HIDDEN,
                 state_dim=STATE_DIM, action_dim=ACTION_DIM):
        self.encoder_hidden = encoder_hidden
        self.network = Network(
            encoder=Recurrent(state_dim, encoder_hidden, rng),
            fc1=Dense(encoder_hidden + action_dim, hidden, rng),
            fc2=Dense(hidden, hidden, rng),
            out=Dense(hidden, 1, rng, activation=None),
        )

    def forward(self, seq, action):
        layers = self.network.layers
        h, c_enc = layers["encoder"].forward(seq)
        h1, c1 = layers["fc1"].forward(np.concatenate([h, action], axis=1))
        h2, c2 = layers["fc2"].forward(h1)
        q, c3 = layers["out"].forward(h2)
        return q[:, 0], (c_enc, c1, c2, c3)

    def backward(self, grad_q, cache):
        """
        Args:
            grad_q: dLoss/dQ, array (batch,)
            cache: From forward

        Returns:
            (parameter grads, dLoss/daction)
        """
        layers = self.network.layers
        c_enc, c1, c2, c3 = cache
        g, g_out = layers["out"].backward(grad_q[:, None], c3)
        g, g_fc2 = layers["fc2"].backward(g, c2)
        g, g_fc1 = layers["fc1"].backward(g, c1)
        g_h, g_action = g[:, :self.encoder_hidden], g[:, self.encoder_hidden:]
        _, g_enc = layers["encoder"].backward(g_h, c_enc)
        grads = Network.prefixed({"encoder": g_enc, "fc1": g_fc1, "fc2": g_fc2, "out": g_out})
        return grads, g_action

    def __call__(self, seq, action):
        return self.forward(seq, action)[0]
