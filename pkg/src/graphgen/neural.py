"""Numpy sequence network: linear embedding, stacked LSTM, five softmax MLP
heads, elementwise binary cross-entropy, backprop through time and Adam.

Everything runs in float64 on the CPU. Arrays are batched as ``(B, T, ...)``.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ShapeMismatch

PROB_EPS = 1e-7


@dataclass(frozen=True)
class NetConfig:
    k: int
    dims: tuple[int, ...]
    embed: int = 92
    hidden: int = 256
    layers: int = 4
    mlp_hidden: int = 512
    dropout: float = 0.2

    def to_dict(self):
        d = asdict(self)
        d["dims"] = list(self.dims)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["dims"] = tuple(d["dims"])
        return cls(**d)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def bce_loss(theta, target, eps: float = PROB_EPS) -> float:
    """Elementwise binary cross-entropy summed over every entry.

    >>> round(bce_loss(np.array([0.5, 0.5]), np.array([1.0, 0.0])), 4)
    1.3863
    """
    th = np.clip(theta, eps, 1.0 - eps)
    return float(-np.sum(target * np.log(th) + (1.0 - target) * np.log(1.0 - th)))


def _bce_terms(theta, target, eps=PROB_EPS):
    """Per-entry loss and its derivative w.r.t. ``theta`` (clamp-aware)."""
    th = np.clip(theta, eps, 1.0 - eps)
    loss = -(target * np.log(th) + (1.0 - target) * np.log(1.0 - th))
    inside = (theta > eps) & (theta < 1.0 - eps)
    grad = (-(target / th) + (1.0 - target) / (1.0 - th)) * inside
    return loss, grad


class SequenceNet:
    """Parameters and forward/backward passes of the generative network."""

    def __init__(self, cfg: NetConfig, rng: np.random.Generator | None = None):
        self.cfg = cfg
        self.params: OrderedDict[str, np.ndarray] = OrderedDict()
        if rng is not None:
            self._init(rng)

    def _uniform(self, rng, shape, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    def _init(self, rng):
        c, p = self.cfg, self.params
        d = c.hidden
        p["emb.W"] = self._uniform(rng, (c.k, c.embed), c.k)
        p["emb.b"] = np.zeros(c.embed)
        for l in range(c.layers):
            n_in = c.embed if l == 0 else d
            p[f"lstm{l}.Wx"] = self._uniform(rng, (n_in, 4 * d), n_in)
            p[f"lstm{l}.Wh"] = self._uniform(rng, (d, 4 * d), d)
            b = np.zeros(4 * d)
            b[d:2 * d] = 1.0  # forget gate
            p[f"lstm{l}.b"] = b
        for h, dim in enumerate(c.dims):
            p[f"head{h}.W1"] = self._uniform(rng, (d, c.mlp_hidden), d)
            p[f"head{h}.b1"] = np.zeros(c.mlp_hidden)
            p[f"head{h}.W2"] = self._uniform(rng, (c.mlp_hidden, dim), c.mlp_hidden)
            p[f"head{h}.b2"] = np.zeros(dim)

    def copy(self) -> SequenceNet:
        out = SequenceNet(self.cfg)
        out.params = OrderedDict((k, v.copy()) for k, v in self.params.items())
        return out

    # -- inference ----------------------------------------------------------

    def init_state(self, batch: int = 1):
        d = self.cfg.hidden
        return [(np.zeros((batch, d)), np.zeros((batch, d))) for _ in range(self.cfg.layers)]

    def step(self, state, x):
        """One transition without dropout. ``x``: ``(B, k)`` one-hot rows (or
        zeros for the start token). Returns ``(new_state, [probs per head])``."""
        p, d = self.params, self.cfg.hidden
        if x.ndim != 2 or x.shape[1] != self.cfg.k:
            raise ShapeMismatch(f"expected (B, {self.cfg.k}) input, got {x.shape}")
        inp = x @ p["emb.W"] + p["emb.b"]
        new = []
        for l, (h, c) in enumerate(state):
            z = inp @ p[f"lstm{l}.Wx"] + h @ p[f"lstm{l}.Wh"] + p[f"lstm{l}.b"]
            i, f = _sigmoid(z[:, :d]), _sigmoid(z[:, d:2 * d])
            g, o = np.tanh(z[:, 2 * d:3 * d]), _sigmoid(z[:, 3 * d:])
            c = f * c + i * g
            h = o * np.tanh(c)
            new.append((h, c))
            inp = h
        probs = []
        for hd in range(len(self.cfg.dims)):
            a = np.maximum(inp @ p[f"head{hd}.W1"] + p[f"head{hd}.b1"], 0.0)
            probs.append(softmax(a @ p[f"head{hd}.W2"] + p[f"head{hd}.b2"]))
        return new, probs

    # -- training -----------------------------------------------------------

    def _dropout_mask(self, rng, shape):
        q = self.cfg.dropout
        if rng is None or q <= 0.0:
            return None
        return (rng.random(shape) >= q) / (1.0 - q)

    def forward(self, X, rng=None):
        """Teacher-forced pass over ``X`` of shape ``(B, T, k)``.

        Dropout is active only when ``rng`` is given.
        """
        p, c = self.params, self.cfg
        d = c.hidden
        if X.ndim != 3 or X.shape[2] != c.k:
            raise ShapeMismatch(f"expected (B, T, {c.k}) input, got {X.shape}")
        B, T, _ = X.shape
        cache = {"X": X, "layers": [], "heads": []}
        inp = X @ p["emb.W"] + p["emb.b"]
        for l in range(c.layers):
            Wh = p[f"lstm{l}.Wh"]
            xz = inp @ p[f"lstm{l}.Wx"] + p[f"lstm{l}.b"]
            hs = np.empty((B, T, d))
            cs = np.empty((B, T, d))
            acts = np.empty((B, T, 4 * d))
            h = np.zeros((B, d))
            cc = np.zeros((B, d))
            for t in range(T):
                z = xz[:, t] + h @ Wh
                a = acts[:, t]
                a[:, :2 * d] = _sigmoid(z[:, :2 * d])
                a[:, 2 * d:3 * d] = np.tanh(z[:, 2 * d:3 * d])
                a[:, 3 * d:] = _sigmoid(z[:, 3 * d:])
                cc = a[:, d:2 * d] * cc + a[:, :d] * a[:, 2 * d:3 * d]
                h = a[:, 3 * d:] * np.tanh(cc)
                hs[:, t] = h
                cs[:, t] = cc
            mask = self._dropout_mask(rng, hs.shape) if l < c.layers - 1 else None
            cache["layers"].append((inp, hs, cs, acts, mask))
            inp = hs * mask if mask is not None else hs
        top = inp
        probs = []
        for hd in range(len(c.dims)):
            a1 = top @ p[f"head{hd}.W1"] + p[f"head{hd}.b1"]
            r = np.maximum(a1, 0.0)
            mask = self._dropout_mask(rng, r.shape)
            rd = r * mask if mask is not None else r
            pr = softmax(rd @ p[f"head{hd}.W2"] + p[f"head{hd}.b2"])
            cache["heads"].append((a1, rd, mask, pr))
            probs.append(pr)
        cache["top"] = top
        return probs, cache

    def _targets(self, target_idx, hd):
        dim = self.cfg.dims[hd]
        return np.eye(dim)[target_idx[..., hd]]

    def loss(self, X, target_idx, mask, rng=None) -> float:
        probs, _ = self.forward(X, rng)
        total = 0.0
        for hd, pr in enumerate(probs):
            l, _ = _bce_terms(pr, self._targets(target_idx, hd))
            total += float(np.sum(l.sum(-1) * mask))
        return total / X.shape[0]

    def loss_and_grads(self, X, target_idx, mask, rng=None, scale: float = 1.0):
        """Masked summed BCE averaged over the batch, and its gradients.

        ``target_idx``: ``(B, T, 5)`` component indices; ``mask``: ``(B, T)``.
        ``scale`` multiplies the loss before differentiation.
        """
        p, c = self.params, self.cfg
        d = c.hidden
        B, T, _ = X.shape
        probs, cache = self.forward(X, rng)
        grads = OrderedDict((k, np.zeros_like(v)) for k, v in p.items())
        w = (mask * (scale / B))[..., None]
        total = 0.0
        top = cache["top"]
        dtop = np.zeros_like(top)
        flat_top = top.reshape(-1, d)
        for hd, (a1, rd, dmask, pr) in enumerate(cache["heads"]):
            l, g = _bce_terms(pr, self._targets(target_idx, hd))
            total += float(np.sum(l.sum(-1) * mask))
            g = g * w
            dz = pr * (g - np.sum(g * pr, axis=-1, keepdims=True))
            dz2 = dz.reshape(-1, dz.shape[-1])
            grads[f"head{hd}.W2"] += rd.reshape(-1, rd.shape[-1]).T @ dz2
            grads[f"head{hd}.b2"] += dz2.sum(0)
            dr = dz @ p[f"head{hd}.W2"].T
            if dmask is not None:
                dr = dr * dmask
            da1 = dr * (a1 > 0)
            da2 = da1.reshape(-1, da1.shape[-1])
            grads[f"head{hd}.W1"] += flat_top.T @ da2
            grads[f"head{hd}.b1"] += da2.sum(0)
            dtop += da1 @ p[f"head{hd}.W1"].T

        dout = dtop
        for l in range(c.layers - 1, -1, -1):
            inp, hs, cs, acts, dmask = cache["layers"][l]
            dhs = dout * dmask if dmask is not None else dout
            Wh = p[f"lstm{l}.Wh"]
            dzs = np.empty((B, T, 4 * d))
            dh_next = np.zeros((B, d))
            dc_next = np.zeros((B, d))
            for t in range(T - 1, -1, -1):
                a = acts[:, t]
                i, f, g, o = a[:, :d], a[:, d:2 * d], a[:, 2 * d:3 * d], a[:, 3 * d:]
                c_t = cs[:, t]
                c_prev = cs[:, t - 1] if t > 0 else np.zeros((B, d))
                tc = np.tanh(c_t)
                dh = dhs[:, t] + dh_next
                dc = dh * o * (1.0 - tc * tc) + dc_next
                dz = dzs[:, t]
                dz[:, :d] = dc * g * i * (1.0 - i)
                dz[:, d:2 * d] = dc * c_prev * f * (1.0 - f)
                dz[:, 2 * d:3 * d] = dc * i * (1.0 - g * g)
                dz[:, 3 * d:] = dh * tc * o * (1.0 - o)
                dc_next = dc * f
                dh_next = dz @ Wh.T
                if t > 0:
                    grads[f"lstm{l}.Wh"] += hs[:, t - 1].T @ dz
            flat_dz = dzs.reshape(-1, 4 * d)
            grads[f"lstm{l}.Wx"] += inp.reshape(-1, inp.shape[-1]).T @ flat_dz
            grads[f"lstm{l}.b"] += flat_dz.sum(0)
            dout = dzs @ p[f"lstm{l}.Wx"].T
        flat_de = dout.reshape(-1, c.embed)
        grads["emb.W"] += cache["X"].reshape(-1, c.k).T @ flat_de
        grads["emb.b"] += flat_de.sum(0)
        return total / B, grads


def forward_step(net: SequenceNet, state, s_prev):
    """Single transition for a k-vector (or ``(B, k)`` batch)."""
    x = np.atleast_2d(np.asarray(s_prev, dtype=float))
    return net.step(state, x)


# -- optimisation -----------------------------------------------------------

class Adam:
    """Adam with global-norm clipping and decoupled weight decay."""

    def __init__(self, params, lr=3e-3, beta1=0.9, beta2=0.999, eps=1e-8,
                 weight_decay=1e-5, clip_norm=1.0):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.weight_decay, self.clip_norm = weight_decay, clip_norm
        self.t = 0
        self.m = OrderedDict((k, np.zeros_like(v)) for k, v in params.items())
        self.v = OrderedDict((k, np.zeros_like(v)) for k, v in params.items())

    def step(self, params, grads):
        norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
        coef = 1.0
        if self.clip_norm and norm > self.clip_norm:
            coef = self.clip_norm / (norm + 1e-12)
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1 ** self.t
        bc2 = 1.0 - b2 ** self.t
        for k, p in params.items():
            g = grads[k] * coef
            m, v = self.m[k], self.v[k]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            update = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            if self.weight_decay:
                p -= self.lr * self.weight_decay * p
            p -= self.lr * update
        return norm

    def state_arrays(self):
        out = OrderedDict()
        for k in self.m:
            out[f"adam.m.{k}"] = self.m[k]
            out[f"adam.v.{k}"] = self.v[k]
        return out


def adam_step(params, grads, adam: Adam):
    adam.step(params, grads)
    return params


def clip_by_global_norm(grads, clip_norm):
    norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if norm <= clip_norm:
        return grads, norm
    coef = clip_norm / norm
    return OrderedDict((k, g * coef) for k, g in grads.items()), norm


# -- gradient verification ----------------------------------------------------

def _sample_entries(name, arr, cfg, per_array, rng):
    """Flat indices to probe; LSTM arrays are sampled inside every gate block."""
    if name.startswith("lstm"):
        d = cfg.hidden
        cols = arr.shape[-1]
        out = []
        for gate in range(4):
            for _ in range(per_array):
                col = gate * d + int(rng.integers(d))
                row = int(rng.integers(arr.shape[0])) if arr.ndim == 2 else 0
                out.append(row * cols + col if arr.ndim == 2 else col)
        return out
    return [int(x) for x in rng.integers(arr.size, size=per_array)]


def finite_difference_check(net: SequenceNet, X, target_idx, mask,
                            tolerance: float = 1e-4, h: float = 1e-5,
                            per_array: int = 3, seed: int = 0,
                            floor: float = 1e-6) -> dict:
    """Compare analytic gradients with central differences.

    Relative error is ``|a - n| / max(|a|, |n|, floor)``. Requires dropout
    disabled so both paths see the same function.
    """
    if net.cfg.dropout > 0:
        raise ValueError("finite-difference check requires dropout disabled")
    rng = np.random.default_rng(seed)
    _, grads = net.loss_and_grads(X, target_idx, mask)
    worst = {}
    for name, arr in net.params.items():
        flat = arr.reshape(-1)
        gflat = grads[name].reshape(-1)
        errs = []
        for idx in _sample_entries(name, arr, net.cfg, per_array, rng):
            old = flat[idx]
            flat[idx] = old + h
            lp = net.loss(X, target_idx, mask)
            flat[idx] = old - h
            lm = net.loss(X, target_idx, mask)
            flat[idx] = old
            num = (lp - lm) / (2 * h)
            ana = gflat[idx]
            errs.append(abs(ana - num) / max(abs(ana), abs(num), floor))
        worst[name] = max(errs)
    max_err = max(worst.values())
    return {"max_rel_error": max_err, "per_param": worst,
            "tolerance": tolerance, "passed": bool(max_err < tolerance)}
