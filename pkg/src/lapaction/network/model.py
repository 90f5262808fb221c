"""Classifier assembly: backbone features, static or stacked-recurrent heads.

Parameters live in a flat dict of named float64 arrays, so the trainer can
treat them uniformly and checkpoints round-trip bit-exactly. Forward passes
record activations in a ForwardPass object; model_backward consumes it and
returns a gradient dict with the same keys and shapes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import (
    ConfigurationError,
    GeometryError,
    StaleActivationError,
    UnavailableBackboneError,
)
from . import ops
from .config import BackboneConfig, HeadConfig
from .recurrent import bidirectional_backward, bidirectional_forward, cell_functions


def _uniform_fan_in(rng, shape, fan_in):
    limit = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-limit, limit, size=shape)


def _orthogonal(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def _recurrent_kernel(rng, units, n_gates):
    """Per-gate orthogonal blocks, concatenated to (units, n_gates*units)."""
    return np.concatenate([_orthogonal(rng, units) for _ in range(n_gates)], axis=1)


def init_parameters(
    backbone: BackboneConfig, head: HeadConfig, seed: int = 0, input_channels: int = 3
) -> dict[str, np.ndarray]:
    """Seeded initialization: uniform fan-in conv/dense, orthogonal recurrent kernels."""
    if backbone.kind != "small_conv":
        raise UnavailableBackboneError(
            f"backbone {backbone.kind!r} requires externally supplied pretrained "
            f"weights, which this build does not include"
        )
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}

    cin = input_channels
    for si, (ch, k, _) in enumerate(backbone.stages):
        params[f"backbone/conv{si}/w"] = _uniform_fan_in(rng, (k, k, cin, ch), k * k * cin)
        params[f"backbone/conv{si}/b"] = np.zeros(ch)
        cin = ch

    d = backbone.feature_dim
    if head.kind == "fully_connected":
        params["head/fc1/w"] = _uniform_fan_in(rng, (d, head.fc_units_1), d)
        params["head/fc1/b"] = np.zeros(head.fc_units_1)
        params["head/fc2/w"] = _uniform_fan_in(rng, (head.fc_units_1, head.fc_units_2), head.fc_units_1)
        params["head/fc2/b"] = np.zeros(head.fc_units_2)
        params["head/out/w"] = _uniform_fan_in(rng, (head.fc_units_2, head.num_classes), head.fc_units_2)
        params["head/out/b"] = np.zeros(head.num_classes)
        return params

    n_gates = 4 if head.kind in ("lstm", "bilstm") else 3
    directions = ("fw", "bw") if head.bidirectional else ("fw",)
    in1 = d
    in2 = head.rnn_units_1 * len(directions)
    for layer, (units, in_dim) in enumerate(((head.rnn_units_1, in1), (head.rnn_units_2, in2)), start=1):
        for direction in directions:
            prefix = f"head/rnn{layer}/{direction}"
            params[f"{prefix}/wx"] = _uniform_fan_in(rng, (in_dim, n_gates * units), in_dim)
            params[f"{prefix}/wh"] = _recurrent_kernel(rng, units, n_gates)
            b = np.zeros(n_gates * units)
            if n_gates == 4:
                b[units : 2 * units] = 1.0  # forget-gate bias
            params[f"{prefix}/b"] = b
    out_in = head.rnn_units_2 * len(directions)
    params["head/out/w"] = _uniform_fan_in(rng, (out_in, head.num_classes), out_in)
    params["head/out/b"] = np.zeros(head.num_classes)
    return params


@dataclass
class ForwardPass:
    """Output probabilities plus the recorded activations needed for backward."""

    probabilities: np.ndarray
    cache: dict
    params_token: int
    training: bool


# ---------------------------------------------------------------------------
# Backbone


def _backbone_forward(frames, config: BackboneConfig, params):
    if config.kind != "small_conv":
        raise UnavailableBackboneError(
            f"backbone {config.kind!r} has no weights available in this build"
        )
    x = np.asarray(frames, dtype=np.float64)
    if x.ndim != 4 or x.shape[-1] != 3:
        raise GeometryError(f"expected frames of shape (T, H, W, 3), got {x.shape}")
    stage_caches = []
    for si, (_, _, stride) in enumerate(config.stages):
        w = params[f"backbone/conv{si}/w"]
        b = params[f"backbone/conv{si}/b"]
        if x.shape[1] < 1 or x.shape[2] < 1:
            raise GeometryError("spatial size collapsed to zero; too many downsampling stages")
        x, conv_cache = ops.conv2d_forward(x, w, b, stride)
        x, relu_mask = ops.relu_forward(x)
        stage_caches.append((conv_cache, relu_mask))
    feats, pool_shape = ops.global_avg_pool_forward(x)
    return feats, (stage_caches, pool_shape)


def _backbone_backward(dfeats, cache, config, grads):
    stage_caches, pool_shape = cache
    dx = ops.global_avg_pool_backward(dfeats, pool_shape)
    for si in range(len(config.stages) - 1, -1, -1):
        conv_cache, relu_mask = stage_caches[si]
        dx = ops.relu_backward(dx, relu_mask)
        dx, dw, db = ops.conv2d_backward(dx, conv_cache)
        grads[f"backbone/conv{si}/w"] = dw
        grads[f"backbone/conv{si}/b"] = db
    return dx


def backbone_forward(frames, config: BackboneConfig, params) -> np.ndarray:
    """Per-frame feature vectors: conv stages then spatial global average pooling."""
    feats, _ = _backbone_forward(frames, config, params)
    return feats


# ---------------------------------------------------------------------------
# Heads


def _fsum_mean(frame_probs):
    t_len = frame_probs.shape[0]
    return np.array([math.fsum(frame_probs[:, c]) / t_len for c in range(frame_probs.shape[1])])


def aggregate_frame_probabilities(frame_probs: np.ndarray) -> np.ndarray:
    """Clip-level probability for the static baseline: mean then renormalize.

    Uses exactly rounded summation so the result is invariant under any
    permutation of the frames.
    """
    mean = _fsum_mean(frame_probs)
    return mean / mean.sum()


def _static_head_forward(feats, config: HeadConfig, params, training, rng):
    a1, fc1_cache = ops.dense_forward(feats, params["head/fc1/w"], params["head/fc1/b"])
    r1, mask1 = ops.relu_forward(a1)
    if training:
        d1, drop_mask = ops.dropout_forward(r1, config.fc_dropout, rng)
    else:
        d1, drop_mask = r1, None
    a2, fc2_cache = ops.dense_forward(d1, params["head/fc2/w"], params["head/fc2/b"])
    r2, mask2 = ops.relu_forward(a2)
    logits, out_cache = ops.dense_forward(r2, params["head/out/w"], params["head/out/b"])
    frame_probs = ops.softmax(logits)
    mean = _fsum_mean(frame_probs)
    probs = mean / mean.sum()
    cache = {
        "kind": "static",
        "fc1": fc1_cache,
        "mask1": mask1,
        "drop": drop_mask,
        "fc2": fc2_cache,
        "mask2": mask2,
        "out": out_cache,
        "frame_probs": frame_probs,
        "mean_sum": mean.sum(),
    }
    return probs, cache


def _static_head_backward(dprobs, probs, cache, grads):
    frame_probs = cache["frame_probs"]
    t_len = frame_probs.shape[0]
    # Renormalization q = m / sum(m): dm = (dq - (dq . q)) / sum(m)
    dmean = (dprobs - np.dot(dprobs, probs)) / cache["mean_sum"]
    dframe_probs = np.tile(dmean / t_len, (t_len, 1))
    dlogits = ops.softmax_backward(frame_probs, dframe_probs)
    dr2, dw, db = ops.dense_backward(dlogits, cache["out"])
    grads["head/out/w"] = dw
    grads["head/out/b"] = db
    da2 = ops.relu_backward(dr2, cache["mask2"])
    dd1, dw, db = ops.dense_backward(da2, cache["fc2"])
    grads["head/fc2/w"] = dw
    grads["head/fc2/b"] = db
    if cache["drop"] is not None:
        dd1 = ops.dropout_backward(dd1, cache["drop"])
    da1 = ops.relu_backward(dd1, cache["mask1"])
    dfeats, dw, db = ops.dense_backward(da1, cache["fc1"])
    grads["head/fc1/w"] = dw
    grads["head/fc1/b"] = db
    return dfeats


def _rnn_layer_forward(x, layer, config, params):
    cell = "lstm" if config.kind in ("lstm", "bilstm") else "gru"
    if config.bidirectional:
        fw = tuple(params[f"head/rnn{layer}/fw/{k}"] for k in ("wx", "wh", "b"))
        bw = tuple(params[f"head/rnn{layer}/bw/{k}"] for k in ("wx", "wh", "b"))
        return bidirectional_forward(x, fw, bw, cell)
    fwd, _ = cell_functions(cell)
    fw = tuple(params[f"head/rnn{layer}/fw/{k}"] for k in ("wx", "wh", "b"))
    return fwd(x, *fw)


def _rnn_layer_backward(dout, layer_cache, layer, config, grads):
    cell = "lstm" if config.kind in ("lstm", "bilstm") else "gru"
    if config.bidirectional:
        dx, fw_grads, bw_grads = bidirectional_backward(layer_cache, dout)
        for direction, (dwx, dwh, db) in (("fw", fw_grads), ("bw", bw_grads)):
            grads[f"head/rnn{layer}/{direction}/wx"] = dwx
            grads[f"head/rnn{layer}/{direction}/wh"] = dwh
            grads[f"head/rnn{layer}/{direction}/b"] = db
        return dx
    _, bwd = cell_functions(cell)
    dx, dwx, dwh, db = bwd(layer_cache, dout)
    grads[f"head/rnn{layer}/fw/wx"] = dwx
    grads[f"head/rnn{layer}/fw/wh"] = dwh
    grads[f"head/rnn{layer}/fw/b"] = db
    return dx


def _recurrent_head_forward(feats, config: HeadConfig, params, training, rng):
    h1, cache1 = _rnn_layer_forward(feats, 1, config, params)
    if training:
        h1d, drop_mask = ops.dropout_forward(h1, config.inter_layer_dropout, rng)
    else:
        h1d, drop_mask = h1, None
    h2, cache2 = _rnn_layer_forward(h1d, 2, config, params)

    u2 = config.rnn_units_2
    if config.readout == "mean":
        readout = h2.mean(axis=0)
    elif config.bidirectional:
        readout = np.concatenate([h2[-1, :u2], h2[0, u2:]])
    else:
        readout = h2[-1]
    logits, out_cache = ops.dense_forward(readout[None, :], params["head/out/w"], params["head/out/b"])
    probs = ops.softmax(logits)[0]
    cache = {
        "kind": "recurrent",
        "rnn1": cache1,
        "drop": drop_mask,
        "rnn2": cache2,
        "h2_shape": h2.shape,
        "out": out_cache,
        "probs": probs,
    }
    return probs, cache


def _recurrent_head_backward(dprobs, cache, config, grads):
    probs = cache["probs"]
    dlogits = ops.softmax_backward(probs[None, :], dprobs[None, :])
    dreadout, dw, db = ops.dense_backward(dlogits, cache["out"])
    grads["head/out/w"] = dw
    grads["head/out/b"] = db
    dreadout = dreadout[0]

    t_len, width = cache["h2_shape"]
    u2 = config.rnn_units_2
    dh2 = np.zeros((t_len, width))
    if config.readout == "mean":
        dh2[:] = dreadout / t_len
    elif config.bidirectional:
        dh2[-1, :u2] = dreadout[:u2]
        dh2[0, u2:] = dreadout[u2:]
    else:
        dh2[-1] = dreadout

    dh1d = _rnn_layer_backward(dh2, cache["rnn2"], 2, config, grads)
    if cache["drop"] is not None:
        dh1d = ops.dropout_backward(dh1d, cache["drop"])
    dfeats = _rnn_layer_backward(dh1d, cache["rnn1"], 1, config, grads)
    return dfeats


def recurrent_head_forward(
    features, config: HeadConfig, params, training: bool = False, rng=None
) -> np.ndarray:
    """Two stacked recurrent layers, final-state readout, binary softmax."""
    if not config.is_recurrent:
        raise ConfigurationError(f"head kind {config.kind!r} is not recurrent")
    if training and rng is None:
        rng = np.random.default_rng(0)
    feats = np.asarray(features, dtype=np.float64)
    probs, _ = _recurrent_head_forward(feats, config, params, training, rng)
    return probs


def static_head_forward(feature, config: HeadConfig, params, training: bool = False, rng=None) -> np.ndarray:
    """Per-frame fully-connected baseline head on a single feature vector."""
    if config.kind != "fully_connected":
        raise ConfigurationError(f"head kind {config.kind!r} is not the static baseline")
    if training and rng is None:
        rng = np.random.default_rng(0)
    feat = np.asarray(feature, dtype=np.float64)[None, :]
    probs, _ = _static_head_forward(feat, config, params, training, rng)
    return probs


# ---------------------------------------------------------------------------
# Full model


def model_forward(
    frames,
    backbone: BackboneConfig,
    head: HeadConfig,
    params,
    training: bool = False,
    rng=None,
) -> ForwardPass:
    """Backbone + configured head on one frame sequence; returns recorded pass."""
    if training and rng is None:
        rng = np.random.default_rng(0)
    feats, bb_cache = _backbone_forward(frames, backbone, params)
    if head.kind == "fully_connected":
        probs, head_cache = _static_head_forward(feats, head, params, training, rng)
    else:
        probs, head_cache = _recurrent_head_forward(feats, head, params, training, rng)
    cache = {"backbone": bb_cache, "head": head_cache, "probs": probs}
    return ForwardPass(
        probabilities=probs, cache=cache, params_token=id(params), training=training
    )


def model_backward(
    forward_pass: ForwardPass,
    backbone: BackboneConfig,
    head: HeadConfig,
    params,
    loss_grad,
) -> dict[str, np.ndarray]:
    """Gradients of every parameter given d(loss)/d(probabilities)."""
    if forward_pass.params_token != id(params):
        raise StaleActivationError(
            "forward pass was recorded with a different parameter set"
        )
    if not forward_pass.training:
        raise StaleActivationError("backward requires a forward pass run with training=True")
    grads: dict[str, np.ndarray] = {}
    dprobs = np.asarray(loss_grad, dtype=np.float64)
    head_cache = forward_pass.cache["head"]
    if head_cache["kind"] == "static":
        dfeats = _static_head_backward(dprobs, forward_pass.cache["probs"], head_cache, grads)
    else:
        dfeats = _recurrent_head_backward(dprobs, head_cache, head, grads)
    _backbone_backward(dfeats, forward_pass.cache["backbone"], backbone, grads)
    for key, value in params.items():
        if key not in grads:
            grads[key] = np.zeros_like(value)
    return grads
