"""Central finite-difference gradient probes (step 1e-3)."""
import numpy as np

STEP = 1e-3
RTOL = 1e-4


def rel_error(a, b, floor=1e-10):
    scale = max(abs(a), abs(b))
    if scale < floor:
        return 0.0
    return abs(a - b) / scale


def probe(f, arr, analytic, rng, count=20, step=STEP, pick=None):
    """Compare ``analytic`` (same shape as ``arr``) against central differences of ``f``.

    ``f`` reads ``arr`` in place.  ``pick`` optionally restricts the flat
    indices considered.  Returns the list of relative errors.
    """
    flat = arr.reshape(-1)
    pool = np.arange(flat.size) if pick is None else np.asarray(pick)
    idx = rng.choice(pool, size=min(count, pool.size), replace=False)
    errs = []
    for i in idx:
        old = flat[i]
        flat[i] = old + step
        up = f()
        flat[i] = old - step
        down = f()
        flat[i] = old
        num = (up - down) / (2 * step)
        errs.append(rel_error(float(analytic.reshape(-1)[i]), num))
    return errs


def activation_pattern(layers, residual=None):
    """Fingerprint of every piecewise-linear switch: ReLU signs, pool winners, loss signs."""
    parts = []
    for layer in layers:
        if layer.kind == "relu":
            parts.append(np.packbits(layer._out > 0).tobytes())
        elif layer.kind == "maxpool":
            parts.append(layer.winners().tobytes())
    if residual is not None:
        parts.append(np.sign(residual).tobytes())
    return b"".join(parts)


def probe_smooth(f, pattern, arr, analytic, rng, count=20, step=STEP, max_reject=None):
    """Like :func:`probe`, but only counts probes whose +-step stays on one linear piece.

    ``f`` evaluates the loss and ``pattern`` returns the activation
    fingerprint of the most recent evaluation.  A probe whose fingerprint
    changes at either end straddles a kink, where a central difference is
    not a derivative estimate; it is replaced by a fresh random coordinate.
    Returns ``(errors, rejected)``.
    """
    flat = arr.reshape(-1)
    f()
    centre = pattern()
    errs, rejected = [], 0
    max_reject = count if max_reject is None else max_reject
    for i in rng.permutation(flat.size):
        if len(errs) == count or rejected > max_reject:
            break
        old = flat[i]
        flat[i] = old + step
        up = f()
        ok = pattern() == centre
        flat[i] = old - step
        down = f()
        ok = ok and pattern() == centre
        flat[i] = old
        if not ok:
            rejected += 1
            continue
        errs.append(rel_error(float(analytic.reshape(-1)[i]), (up - down) / (2 * step)))
    return errs, rejected


def probe_model(f, pattern, named, rng, count=20, step=STEP, max_reject=20):
    """Kink-aware probes spread over a whole model.

    Each probe picks a parameter tensor uniformly, then a coordinate within
    it.  ``named`` is a list of ``(name, param, grad)``.  Returns
    ``(records, rejected)`` with records ``(name, index, rel_error)``.
    """
    f()
    centre = pattern()
    seen = set()
    records, rejected = [], 0
    while len(records) < count and rejected <= max_reject:
        t = int(rng.integers(len(named)))
        name, p, g = named[t]
        i = int(rng.integers(p.size))
        if (t, i) in seen:
            continue
        seen.add((t, i))
        flat = p.reshape(-1)
        old = flat[i]
        flat[i] = old + step
        up = f()
        ok = pattern() == centre
        flat[i] = old - step
        down = f()
        ok = ok and pattern() == centre
        flat[i] = old
        if not ok:
            rejected += 1
            continue
        records.append((name, i, rel_error(float(g.reshape(-1)[i]), (up - down) / (2 * step))))
    return records, rejected


def spaced(rng, shape, gap=0.05):
    """Distinct values at least ``gap`` apart and away from zero (no kinks within a step)."""
    n = int(np.prod(shape))
    vals = (np.arange(n) - n / 2 + 0.5) * gap
    return rng.permutation(vals).reshape(shape)


def layer_check(layer, x, rng, count=20):
    """Probe input and parameter gradients of ``sum(r * layer(x))``."""
    r = rng.standard_normal(layer.forward(x).shape)

    def f():
        return float(np.sum(r * layer.forward(x)))

    layer.zero_grad()
    layer.forward(x)
    dx = layer.backward(r)
    errs = {}
    if dx is not None:
        errs["x"] = probe(f, x, dx, rng, count)
    for key, p in layer.params.items():
        errs[key] = probe(f, p, layer.grads[key].copy(), rng, count)
    return errs


def assert_small(errs):
    for key, e in errs.items():
        assert len(e) > 0
        assert max(e) < RTOL, (key, max(e))
