"""NumPy versions of the compiled kernels in ``_ckernels.pyx``."""
import numpy as np


def _count_values(a0, a1, a00, a01, a11, n, n1):
    n2, n3 = np.meshgrid(np.arange(n - n1 + 1), np.arange(n - n1 + 1), indexing="ij")
    ok = n2 + n3 <= n - n1
    n2, n3 = n2[ok], n3[ok]
    n4 = n - n1 - n2 - n3
    s0 = n1 + n2 - n3 - n4
    s1 = n1 - n2 + n3 - n4
    t = n1 - n2 - n3 + n4
    vals = a0 * s0 + a1 * s1 + a00 * (s0 * s0 - n) + a01 * (s0 * s1 - t) + a11 * (s1 * s1 - n)
    return n2, n3, vals


def count_minimum(a0, a1, a00, a01, a11, n, rel_tol=1e-12):
    best = np.inf
    for n1 in range(n + 1):
        best = min(best, _count_values(a0, a1, a00, a01, a11, n, n1)[2].min())
    best = float(best)
    thresh = best + rel_tol * (1.0 if -1.0 < best < 1.0 else abs(best))
    for n1 in range(n + 1):
        n2, n3, vals = _count_values(a0, a1, a00, a01, a11, n, n1)
        hit = np.flatnonzero(vals <= thresh)
        if hit.size:
            # meshgrid in ij order keeps (n2, n3) lexicographic
            j = hit[0]
            return best, (n1, int(n2[j]), int(n3[j]), int(n - n1 - n2[j] - n3[j]))
    return best, (n, 0, 0, 0)


def dicke_moments(psi, x, z):
    psi = np.asarray(psi, dtype=float)
    p = psi * psi
    c = psi[:-1] * psi[1:] * x
    xl = np.concatenate(([0.0], x))
    xr = np.concatenate((x, [0.0]))
    jxx = np.dot(xl * xl + xr * xr, p) + 2.0 * np.dot(psi[:-2] * psi[2:], x[:-1] * x[1:])
    return (
        float(2.0 * c.sum()),
        float(np.dot(z, p)),
        float(jxx),
        float(np.dot(z * z, p)),
        float(2.0 * np.dot(c, z[:-1] + z[1:])),
    )
