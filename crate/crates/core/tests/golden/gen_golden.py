"""Independent reference values for the propagator cascade.

Nothing here reuses the normal-mode formulas of the library. The classical
action comes from the phase-space flow matrix exp(tL) of the quadratic
Hamiltonian, and each packet exponent from the closed-form Gaussian integral
log ∫ exp(-yᵀMy + bᵀy + c) dy = c + bᵀM⁻¹b/4 + const.

Run: python3 gen_golden.py > golden.txt
"""

import datetime

import mpmath as mp

mp.mp.dps = 40

M_MASS = mp.mpf(1)
HBAR = mp.mpf(1)
W12, W13, W23 = mp.mpf("0.305"), mp.mpf("0.1"), mp.mpf("0.202")
D = [mp.mpf(-5), mp.mpf(6), mp.mpf("7.5")]
SIGMA = [mp.mpf(1)] * 3
# Packet k: which particles start at d rather than 0.
DISPLACED = [
    (False, False, False), (True, False, False), (False, True, False), (False, False, True),
    (True, True, False), (True, False, True), (False, True, True), (True, True, True),
]


def stiffness():
    k = mp.matrix(3, 3)
    pairs = {(0, 1): W12, (0, 2): W13, (1, 2): W23}
    for (i, j), w in pairs.items():
        w2 = w * w
        k[i, i] += w2
        k[j, j] += w2
        k[i, j] -= w2
        k[j, i] -= w2
    return k


def flow_blocks(t):
    k = stiffness()
    gen = mp.matrix(6, 6)
    for i in range(3):
        gen[i, 3 + i] = 1 / M_MASS
        for j in range(3):
            gen[3 + i, j] = -M_MASS * k[i, j]
    f = mp.expm(gen * t)
    blk = lambda r, c: mp.matrix([[f[r + i, c + j] for j in range(3)] for i in range(3)])
    return blk(0, 0), blk(0, 3), blk(3, 0), blk(3, 3)


def action_parts(t):
    """(Q0, Cross, Qf): S = ½yᵀQ0y − yᵀ·Cross·X + ½XᵀQfX."""
    a, b, _, d = flow_blocks(t)
    binv = b ** -1
    return binv * a, binv, d * binv


def offsets(k):
    return [D[i] if DISPLACED[k][i] else mp.mpf(0) for i in range(3)]


def gaussian_matrix(t):
    q0, _, _ = action_parts(t)
    m = mp.matrix(3, 3)
    for i in range(3):
        for j in range(3):
            m[i, j] = -1j * q0[i, j] / (2 * HBAR)
        m[i, i] += 1 / (4 * SIGMA[i] ** 2)
    return m


def theta(t, x, k):
    _, cross, qf = action_parts(t)
    m = gaussian_matrix(t)
    xv = mp.matrix(x)
    cx = cross * xv
    off = offsets(k)
    b = mp.matrix([off[i] / (2 * SIGMA[i] ** 2) - 1j * cx[i] / HBAR for i in range(3)])
    c = -sum(off[i] ** 2 / (4 * SIGMA[i] ** 2) for i in range(3)) + 1j * (xv.T * qf * xv)[0] / (2 * HBAR)
    return (b.T * (m ** -1) * b)[0] / 4 + c


def cofactor(m, i, j):
    rows = [r for r in range(3) if r != i]
    cols = [c for c in range(3) if c != j]
    minor = m[rows[0], cols[0]] * m[rows[1], cols[1]] - m[rows[0], cols[1]] * m[rows[1], cols[0]]
    return (-1) ** (i + j) * minor


def emit(key, v):
    print(f"{key} = {mp.nstr(v, 20, min_fixed=1, max_fixed=0)}")


def main():
    print(f"# generated {datetime.date.today().isoformat()} by gen_golden.py, mpmath dps={mp.mp.dps}")
    print("# oracle: phase-space flow exp(tL) for the action, Gaussian integral for exponents")
    ev = sorted(mp.eigsy(-stiffness())[0], reverse=True)
    emit("lambda1", ev[1])
    emit("lambda2", ev[2])
    emit("lambda3", ev[0])

    q0, cross, _ = action_parts(mp.mpf(1))
    for i in range(3):
        emit(f"real_a_{i}", q0[i, i] / 2)
        for j in range(3):
            if i != j:
                emit(f"real_b_{i}{j}", q0[i, j])
            emit(f"real_alpha_{i}{j}", cross[i, j])
    cx = cross * mp.matrix([1, 2, 3])
    for i in range(3):
        emit(f"c_linear_{i}", -cx[i])

    m = gaussian_matrix(mp.mpf(2))
    delta = mp.det(m)
    emit("delta_re", mp.re(delta))
    emit("delta_im", mp.im(delta))
    for i in range(3):
        lam = 4 * cofactor(m, i, i)
        emit(f"lambda_c_{i}_re", mp.re(lam))
        emit(f"lambda_c_{i}_im", mp.im(lam))
    for i, j in [(0, 1), (1, 2), (2, 0)]:
        mu = 8 * cofactor(m, i, j)
        emit(f"mu_{i}{j}_re", mp.re(mu))
        emit(f"mu_{i}{j}_im", mp.im(mu))

    x = [mp.mpf(-2), mp.mpf(3), mp.mpf(4)]
    for k in (0, 5, 7):
        th = theta(mp.mpf("3.005"), x, k)
        emit(f"theta_{k}_re", mp.re(th))
        emit(f"theta_{k}_im", mp.im(th))


if __name__ == "__main__":
    main()
