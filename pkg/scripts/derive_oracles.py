"""
Reference values for the test suite, computed independently of the package.

Everything here uses mpmath at 50 digits and never imports
``schrodinger_interp``. Run once; the output is frozen in
``tests/data/oracle_values.json``.

    python3 scripts/derive_oracles.py > tests/data/oracle_values.json
"""

import json

import mpmath as mp

mp.mp.dps = 50


def bimodal(x):
    if x < 0 or x > 1:
        return mp.mpf(0)
    if x < mp.mpf(2) / 3:
        return mp.mpf("0.2") - mp.mpf("0.2") * mp.cos(3 * mp.pi * x) + mp.mpf("0.2")
    return 5 - 5 * mp.cos(6 * mp.pi * x - 4 * mp.pi) + mp.mpf("0.2")


def ipf(K, r0, r1, sweeps=4000):
    """Alternating row/column rescaling of the joint matrix itself."""
    n, m = len(r0), len(r1)
    P = [[mp.mpf(K[i][j]) for j in range(m)] for i in range(n)]
    for _ in range(sweeps):
        for i in range(n):
            s = mp.fsum(P[i])
            P[i] = [v * r0[i] / s for v in P[i]]
        for j in range(m):
            s = mp.fsum(P[i][j] for i in range(n))
            for i in range(n):
                P[i][j] = P[i][j] * r1[j] / s
    return P


def lcg(seed):
    # tiny deterministic generator so the fixture can be rebuilt anywhere
    state = seed
    while True:
        state = (6364136223846793005 * state + 1442695040888963407) % 2**64
        yield (state >> 11) / 2**53


def random_problem(n, m, seed):
    g = lcg(seed)
    K = [[0.05 + next(g) for _ in range(m)] for _ in range(n)]
    a = [0.1 + next(g) for _ in range(n)]
    b = [0.1 + next(g) for _ in range(m)]
    sa, sb = sum(a), sum(b)
    return K, [v / sa for v in a], [v / sb for v in b]


def f(x):
    return float(x)


out = {}

# density fixture
out["bimodal_at_third"] = f(bimodal(mp.mpf(1) / 3))
low = mp.quad(bimodal, [0, mp.mpf(2) / 3])
high = mp.quad(bimodal, [mp.mpf(2) / 3, 1])
out["bimodal_total"] = f(low + high)
out["bimodal_low_total"] = f(low)
out["bimodal_cdf_two_thirds_normalized"] = f(low / (low + high))

# Hilbert metric and contraction
out["hilbert_12_21"] = f(mp.log(4))
out["birkhoff_ratio_delta_2"] = f(mp.tanh(mp.mpf("0.5")))
out["bound_ratio_e"] = f(mp.tanh(mp.mpf("0.5")) ** 2)
out["bound_ratio_10"] = f(mp.tanh(mp.log(10) / 2) ** 2)

# heat kernel entries
out["kernel_1d_diag"] = f(1 / mp.sqrt(2 * mp.pi))
out["kernel_1d_unit"] = f(mp.exp(mp.mpf(-0.5)) / mp.sqrt(2 * mp.pi))
out["kernel_2d_diag_half_001"] = f(1 / (2 * mp.pi * mp.mpf("0.005")))

# 2x2 kernel applications and one step of the composed map
K2 = [[mp.mpf(1), mp.mpf("0.5")], [mp.mpf("0.5"), mp.mpf(1)]]
out["apply_2x2_ones"] = [f(K2[i][0] + K2[i][1]) for i in range(2)]
out["adjoint_2x2_20"] = [f(2 * K2[0][j]) for j in range(2)]
phi1 = [mp.mpf("0.5") / 1, mp.mpf("0.5") / 1]
phi0 = [mp.fsum(K2[i][k] * phi1[k] for k in range(2)) for i in range(2)]
phihat0 = [mp.mpf("0.5") / v for v in phi0]
out["iterate_once_2x2"] = [f(mp.fsum(K2[j][k] * phihat0[j] for j in range(2))) for k in range(2)]
P = ipf(K2, [mp.mpf("0.5")] * 2, [mp.mpf("0.5")] * 2, sweeps=200)
out["coupling_2x2"] = [[f(v) for v in row] for row in P]

# random small problems solved by IPF
problems = []
for n, m, seed in ((3, 4, 1), (5, 5, 2), (2, 5, 3)):
    K, a, b = random_problem(n, m, seed)
    P = ipf(K, [mp.mpf(v) for v in a], [mp.mpf(v) for v in b], sweeps=600)
    problems.append({"kernel": K, "rho0": a, "rho1": b, "coupling": [[f(v) for v in row] for row in P]})
out["ipf_problems"] = problems

# Gaussian quantities
out["normal_central_95_halfwidth"] = f(mp.sqrt(2) * mp.erfinv(mp.mpf("0.95")))

print(json.dumps(out, indent=1))
