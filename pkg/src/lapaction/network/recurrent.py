"""LSTM and GRU sequence layers with exact backward passes.

Layers run over a single sequence (T, D). Parameters are packed as
(wx, wh, b) with gate blocks concatenated along the last axis:
LSTM gates in order (input, forget, cell, output); GRU in order
(reset, update, candidate). The GRU candidate uses tanh(x@Wn + (r*h)@Un + bn)
and the state update h' = (1 - z) * n + z * h_prev. Bidirectional layers run
an independent cell over the reversed sequence and concatenate per-step
outputs, so their output at step t is exactly
concat(forward(t), backward(t)).
"""

from __future__ import annotations

import numpy as np


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def lstm_forward(x, wx, wh, b):
    t_len = x.shape[0]
    h_units = wh.shape[0]
    hs = np.zeros((t_len, h_units))
    cs = np.zeros((t_len, h_units))
    gates = np.zeros((t_len, 4 * h_units))
    hcs = np.zeros((t_len, h_units))
    h = np.zeros(h_units)
    c = np.zeros(h_units)
    for t in range(t_len):
        z = x[t] @ wx + h @ wh + b
        i = _sigmoid(z[:h_units])
        f = _sigmoid(z[h_units : 2 * h_units])
        g = np.tanh(z[2 * h_units : 3 * h_units])
        o = _sigmoid(z[3 * h_units :])
        c = f * c + i * g
        hc = np.tanh(c)
        h = o * hc
        gates[t] = np.concatenate([i, f, g, o])
        cs[t] = c
        hcs[t] = hc
        hs[t] = h
    return hs, (x, hs, cs, gates, hcs, wx, wh)


def lstm_backward(cache, dh_out):
    x, hs, cs, gates, hcs, wx, wh = cache
    t_len, h_units = hs.shape
    dwx = np.zeros_like(wx)
    dwh = np.zeros_like(wh)
    db = np.zeros(4 * h_units)
    dx = np.zeros_like(x)
    dh_next = np.zeros(h_units)
    dc_next = np.zeros(h_units)
    for t in range(t_len - 1, -1, -1):
        i = gates[t, :h_units]
        f = gates[t, h_units : 2 * h_units]
        g = gates[t, 2 * h_units : 3 * h_units]
        o = gates[t, 3 * h_units :]
        hc = hcs[t]
        h_prev = hs[t - 1] if t > 0 else np.zeros(h_units)
        c_prev = cs[t - 1] if t > 0 else np.zeros(h_units)

        dh = dh_out[t] + dh_next
        do = dh * hc
        dc = dh * o * (1.0 - hc**2) + dc_next
        di = dc * g
        dg = dc * i
        df = dc * c_prev
        dc_next = dc * f
        dz = np.concatenate(
            [di * i * (1.0 - i), df * f * (1.0 - f), dg * (1.0 - g**2), do * o * (1.0 - o)]
        )
        dwx += np.outer(x[t], dz)
        dwh += np.outer(h_prev, dz)
        db += dz
        dx[t] = dz @ wx.T
        dh_next = dz @ wh.T
    return dx, dwx, dwh, db


def gru_forward(x, wx, wh, b):
    t_len = x.shape[0]
    h_units = wh.shape[0]
    hs = np.zeros((t_len, h_units))
    gates = np.zeros((t_len, 3 * h_units))  # r, z, n
    acts = np.zeros((t_len, h_units))  # a = r * h_prev
    h = np.zeros(h_units)
    for t in range(t_len):
        zr = x[t] @ wx[:, : 2 * h_units] + h @ wh[:, : 2 * h_units] + b[: 2 * h_units]
        r = _sigmoid(zr[:h_units])
        z = _sigmoid(zr[h_units:])
        a = r * h
        n = np.tanh(x[t] @ wx[:, 2 * h_units :] + a @ wh[:, 2 * h_units :] + b[2 * h_units :])
        h = (1.0 - z) * n + z * h
        gates[t] = np.concatenate([r, z, n])
        acts[t] = a
        hs[t] = h
    return hs, (x, hs, gates, acts, wx, wh)


def gru_backward(cache, dh_out):
    x, hs, gates, acts, wx, wh = cache
    t_len, h_units = hs.shape
    dwx = np.zeros_like(wx)
    dwh = np.zeros_like(wh)
    db = np.zeros(3 * h_units)
    dx = np.zeros_like(x)
    dh_next = np.zeros(h_units)
    for t in range(t_len - 1, -1, -1):
        r = gates[t, :h_units]
        z = gates[t, h_units : 2 * h_units]
        n = gates[t, 2 * h_units :]
        a = acts[t]
        h_prev = hs[t - 1] if t > 0 else np.zeros(h_units)

        dh = dh_out[t] + dh_next
        dz_gate = dh * (h_prev - n)
        dn = dh * (1.0 - z)
        dh_prev = dh * z

        dn_pre = dn * (1.0 - n**2)
        da = dn_pre @ wh[:, 2 * h_units :].T
        dr = da * h_prev
        dh_prev = dh_prev + da * r

        dr_pre = dr * r * (1.0 - r)
        dz_pre = dz_gate * z * (1.0 - z)

        drz_pre = np.concatenate([dr_pre, dz_pre])
        dx[t] = drz_pre @ wx[:, : 2 * h_units].T + dn_pre @ wx[:, 2 * h_units :].T
        dh_prev = dh_prev + drz_pre @ wh[:, : 2 * h_units].T

        dwx[:, : 2 * h_units] += np.outer(x[t], drz_pre)
        dwx[:, 2 * h_units :] += np.outer(x[t], dn_pre)
        dwh[:, : 2 * h_units] += np.outer(h_prev, drz_pre)
        dwh[:, 2 * h_units :] += np.outer(a, dn_pre)
        db[: 2 * h_units] += drz_pre
        db[2 * h_units :] += dn_pre

        dh_next = dh_prev
    return dx, dwx, dwh, db


_CELLS = {"lstm": (lstm_forward, lstm_backward), "gru": (gru_forward, gru_backward)}


def cell_functions(cell: str):
    return _CELLS[cell]


def bidirectional_forward(x, fw_params, bw_params, cell):
    """Per-step concat of a forward run and a reversed-input backward run."""
    fwd, _ = cell_functions(cell)
    h_fw, cache_fw = fwd(x, *fw_params)
    h_bw_rev, cache_bw = fwd(x[::-1], *bw_params)
    out = np.concatenate([h_fw, h_bw_rev[::-1]], axis=1)
    return out, (cell, cache_fw, cache_bw, h_fw.shape[1])


def bidirectional_backward(cache, dout):
    cell, cache_fw, cache_bw, h_units = cache
    _, bwd = cell_functions(cell)
    dx_fw, dwx_fw, dwh_fw, db_fw = bwd(cache_fw, dout[:, :h_units])
    dx_bw_rev, dwx_bw, dwh_bw, db_bw = bwd(cache_bw, dout[::-1, h_units:])
    dx = dx_fw + dx_bw_rev[::-1]
    return dx, (dwx_fw, dwh_fw, db_fw), (dwx_bw, dwh_bw, db_bw)
