"""Per-splat deformation: hexplane features + motion embedding -> decoder ->
additive position/log-scale deltas and a multiplicative rotation delta.

The applied deformation is referenced to the trajectory start time:
delta(t) = decoder(features(t)) - decoder(features(0)), so the canonical
configuration is exactly the scene at t = 0 (every animated video starts on
the static rendering) and static content cannot leak into the deformation
field as a time-constant offset.
"""

import numpy as np

from sceneforge.splats import quat

IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])
REFERENCE_TIME = 0.0


def normalize_coords(positions, bbox):
    """Map world positions into the [0,1]^3 hexplane query domain."""
    lo, hi = bbox
    return (positions - lo) / (hi - lo)


def _decode_at(positions, t, field, decoder, embedding):
    n = len(positions)
    coords = np.empty((n, 4))
    coords[:, :3] = normalize_coords(positions, field_bbox(field))
    coords[:, 3] = t
    feats, hex_cache = field.sample(coords)
    dec_in = np.concatenate([feats, np.tile(embedding, (n, 1))], axis=1)
    out, dec_cache = decoder.forward(dec_in)
    return out, (hex_cache, dec_cache, feats.shape[1])


def deform_forward(positions, rotations_raw, log_scales, t, field, decoder, embedding):
    """Returns (pos_d, quat_d, logs_d, cache); quat_d is unit.

    embedding: (W,) vector shared by all splats of this evaluation. Each
    head's time-referenced output is scaled by a per-video motion gain
    1 + e . g_head (g zero-initialized), the embedding's first-order route
    to modulating motion strength.
    """
    qn, norms = quat.normalize(rotations_raw)
    embedding = np.asarray(embedding, dtype=np.float64)
    out_t, branch_t = _decode_at(positions, t, field, decoder, embedding)
    out_0, branch_0 = _decode_at(positions, REFERENCE_TIME, field, decoder, embedding)
    diffs = {}
    gains = {}
    scaled = {}
    for head in ("dx", "dr", "ds"):
        diffs[head] = out_t[head] - out_0[head]
        gains[head] = 1.0 + float(embedding @ decoder.params[f"g_{head}"])
        scaled[head] = gains[head] * diffs[head]
    pos_d = positions + scaled["dx"]
    logs_d = log_scales + scaled["ds"]
    delta_raw = scaled["dr"] + IDENTITY_QUAT
    delta, delta_norms = quat.normalize(delta_raw)
    quat_d = quat.mul(delta, qn)
    cache = dict(
        qn=qn, norms=norms, delta=delta, delta_norms=delta_norms,
        branch_t=branch_t, branch_0=branch_0, field=field, decoder=decoder,
        diffs=diffs, gains=gains, embedding=embedding, dx=scaled["dx"],
    )
    return pos_d, quat_d, logs_d, cache


def _branch_backward(cache, branch, upstream, sign):
    field = cache["field"]
    decoder = cache["decoder"]
    hex_cache, dec_cache, feat_dim = branch
    signed = {k: sign * v for k, v in upstream.items()}
    dec_grads, d_in = decoder.backward(signed, dec_cache)
    grid_grads, coord_grad = field.backward(d_in[:, :feat_dim], hex_cache)
    g_embedding = d_in[:, feat_dim:].sum(axis=0)
    return dec_grads, grid_grads, coord_grad, g_embedding


def deform_backward(cache, g_pos_d, g_quat_d, g_logs_d, g_dx_extra=None):
    """Chain render gradients (plus any direct d/d_dx term, e.g. rigidity)
    back to canonical params, grids, decoder weights, and the embedding.

    Returns dict: positions, rotations, log_scales, grid_grads, decoder_grads,
    embedding.
    """
    field = cache["field"]
    decoder = cache["decoder"]
    g_delta, g_qn = quat.mul_backward(g_quat_d, cache["delta"], cache["qn"])
    g_delta_raw = quat.normalize_backward(g_delta, cache["delta"], cache["delta_norms"])
    g_rot_raw = quat.normalize_backward(g_qn, cache["qn"], cache["norms"])
    up_scaled = {
        "dx": g_pos_d if g_dx_extra is None else g_pos_d + g_dx_extra,
        "dr": g_delta_raw,
        "ds": g_logs_d,
    }
    # through the per-head gains: scaled = gain * diff
    gains = cache["gains"]
    diffs = cache["diffs"]
    embedding = cache["embedding"]
    upstream = {h: gains[h] * up_scaled[h] for h in up_scaled}
    gain_grads = {h: float(np.sum(up_scaled[h] * diffs[h])) for h in up_scaled}
    g_embedding_gain = np.zeros_like(embedding)
    dec_extra = {}
    for h, gg in gain_grads.items():
        dec_extra[f"g_{h}"] = gg * embedding
        g_embedding_gain += gg * decoder.params[f"g_{h}"]

    dec_t, grids_t, coord_t, emb_t = _branch_backward(cache, cache["branch_t"], upstream, 1.0)
    dec_0, grids_0, coord_0, emb_0 = _branch_backward(cache, cache["branch_0"], upstream, -1.0)
    dec_grads = {k: dec_t[k] + dec_0[k] for k in dec_t}
    dec_grads.update(dec_extra)
    grid_grads = [
        [gt + g0 for gt, g0 in zip(lt, l0)] for lt, l0 in zip(grids_t, grids_0)
    ]
    coord_grad = coord_t + coord_0
    lo, hi = field_bbox(field)
    g_positions = g_pos_d + coord_grad[:, :3] / (hi - lo)
    return dict(
        positions=g_positions,
        rotations=g_rot_raw,
        log_scales=g_logs_d,
        grid_grads=grid_grads,
        decoder_grads=dec_grads,
        embedding=emb_t + emb_0 + g_embedding_gain,
    )


def field_bbox(field):
    return field.bbox


def attach_bbox(field, lo, hi):
    """Store the world-space query bounds on the field instance."""
    field.bbox = (np.asarray(lo, dtype=np.float64), np.asarray(hi, dtype=np.float64))
    return field
