"""Independent reference values frozen into the Rust test suites.

Run with `python3 tools/oracles.py`; every printed number appears verbatim
in a test under crates/*/tests.
"""
import numpy as np


def axis(n, v_max):
    h = 2.0 * v_max / n
    return h, -v_max + h * (np.arange(n) + 0.5)


def maxwellian_mass(n, v_max):
    h, x = axis(n, v_max)
    g = np.exp(-0.5 * x**2) / np.sqrt(2 * np.pi)
    return (h * g.sum()) ** 3


def moment_1d(n, v_max, p):
    h, x = axis(n, v_max)
    g = np.exp(-0.5 * x**2) / np.sqrt(2 * np.pi)
    m0 = h * g.sum()
    return h * (x**p * g).sum() * m0 * m0


def sigma_at(n, v_max, gamma, v):
    h, x = axis(n, v_max)
    V = np.stack(np.meshgrid(x, x, x, indexing="ij"), -1).reshape(-1, 3)
    mu = np.exp(-0.5 * (V**2).sum(1)) / (2 * np.pi) ** 1.5
    u = np.asarray(v)[None, :] - V
    r2 = (u**2).sum(1)
    ok = r2 > 0
    s = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            k = np.where(ok, ((i == j) - u[:, i] * u[:, j] / np.where(ok, r2, 1)) * np.where(ok, r2, 1) ** (0.5 * (gamma + 2)), 0.0)
            s[i, j] = h**3 * (k * mu).sum()
    return s


if __name__ == "__main__":
    print("mass n=16", repr(maxwellian_mass(16, 6.0)))
    print("mass n=4", repr(maxwellian_mass(4, 6.0)))
    for p in range(0, 11, 2):
        print("moment n=16 p=%d" % p, repr(moment_1d(16, 6.0, p)))
    print("sigma(0) n=16 gamma=-2", repr(sigma_at(16, 6.0, -2.0, [0, 0, 0])[0, 0]))
    s = sigma_at(8, 6.0, -1.0, [0.75, 0.75, 2.25])
    print("sigma n=8 gamma=-1 v=(0.75,0.75,2.25)", [repr(s[0, 0]), repr(s[0, 1]), repr(s[0, 2]), repr(s[1, 1]), repr(s[1, 2]), repr(s[2, 2])])
