import numpy as np


def fd_grad(f, arrays, h=1e-5):
    """Central finite differences of a scalar function of numpy arrays.

    ``f`` takes no arguments and recomputes the scalar from the current
    contents of ``arrays``; entries are perturbed in place and restored.
    """
    grads = []
    for a in arrays:
        g = np.zeros_like(a)
        flat, gf = a.ravel(), g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = f()
            flat[i] = orig - h
            gf[i] = (up - f()) / (2.0 * h)
            flat[i] = orig
        grads.append(g)
    return grads


def rel_err(got, want):
    got = np.asarray(got, dtype=np.float64)
    want = np.asarray(want, dtype=np.float64)
    return float(np.linalg.norm(got - want)
                 / max(1.0, np.linalg.norm(want)))
