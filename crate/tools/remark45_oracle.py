#!/usr/bin/env python3
"""Generate the bundled scenario files and freeze expected values for the
free-module three-letter demo.

Run from the repository root:

    python3 tools/remark45_oracle.py

Writes scenarios/*.json and tools/remark45_expected.json.  The demo value is
computed from first principles with a small apply-to-vector engine on the
truncated free module (scalar base ring, trace slots) and cross-checked
against the closed form; the Rust test suite freezes the printed numbers.
"""

import json

import numpy as np

MASTER_SEED = 20260819

I2 = np.eye(2, dtype=complex)
E11 = np.array([[1, 0], [0, 0]], dtype=complex)
E12 = np.array([[0, 1], [0, 0]], dtype=complex)
E21 = np.array([[0, 0], [1, 0]], dtype=complex)
E22 = np.array([[0, 0], [0, 1]], dtype=complex)
M2_BASIS = [E11, E12, E21, E22]

# Orthonormal basis of the traceless 2x2 matrices for <x,y> = tr(x* y)/2.
SLOT_BASIS = [np.sqrt(2) * E12, np.sqrt(2) * E21, E11 - E22]


def c2j(z):
    return [float(np.real(z)), float(np.imag(z))]


def m2j(m):
    return [[c2j(z) for z in row] for row in np.asarray(m)]


def gauss(rng, n=2):
    return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)


def density(rng):
    g = gauss(rng)
    rho = g @ g.conj().T + 0.1 * I2
    return rho / np.trace(rho).real


def centered(a):
    return a - (np.trace(a) / 2) * I2


def opnorm(a):
    return np.linalg.norm(a, 2)


def trace_state(x):
    return complex(np.trace(x)) / 2


def slot_coeffs(x):
    """Coefficients of a traceless matrix in SLOT_BASIS."""
    return np.array([np.trace(b.conj().T @ x) / 2 for b in SLOT_BASIS])


def hat_parts(a):
    """(vacuum coefficient, centered slot coefficients) of hat(a)."""
    return trace_state(a), slot_coeffs(centered(a))


# ---------------------------------------------------------------------------
# Truncated free module over the scalars: vectors are dicts mapping an
# alternating index tuple to a coefficient tensor over the slot bases.
# ---------------------------------------------------------------------------

DEPTH = 5


def lam_apply(i, a, vec):
    """Full free-product left action of a (in algebra i) on vec."""
    out = {}

    def add(tup, coef):
        if tup in out:
            out[tup] = out[tup] + coef
        else:
            out[tup] = coef.copy()

    # First-slot action data for algebra i.
    vac_row = np.array([trace_state(a @ b) for b in SLOT_BASIS])
    mat = np.array([[np.trace(bk.conj().T @ (a @ bj)) / 2 for bj in SLOT_BASIS]
                    for bk in SLOT_BASIS])
    psi_a, hat_a = hat_parts(a)

    for tup, coef in vec.items():
        if tup == ():
            add((), psi_a * coef)
            add((i,), hat_a * coef[0])
        elif tup[0] == i:
            lower = np.tensordot(vac_row, coef, axes=([0], [0]))
            add(tup[1:], lower if tup[1:] else np.atleast_1d(lower))
            add(tup, np.tensordot(mat, coef, axes=([1], [0])))
        else:
            if abs(psi_a) > 0:
                add(tup, psi_a * coef)
            if len(tup) >= DEPTH:
                raise RuntimeError("truncation depth exceeded")
            add((i,) + tup, np.multiply.outer(hat_a, coef))
    return {t: c for t, c in out.items() if np.max(np.abs(c)) > 0}


def proj_le(i, vec):
    return {t: c for t, c in vec.items() if t == () or t[0] <= i}


def u_apply(i, a, vec):
    return lam_apply(i, a, proj_le(i, vec))


def vec_norm(vec):
    return np.sqrt(sum(float(np.sum(np.abs(c) ** 2)) for c in vec.values()))


def demo_value(a1, a2, a3, indices):
    """A1 A2 A3 (f3 (x) f2) with A_j = u_{i_j}(a_j), f2 = hat(a2*),
    f3 = <f2,f2> hat(a3*)."""
    i1, i2, i3 = indices
    b = trace_state(a2 @ a2.conj().T)
    f2 = slot_coeffs(a2.conj().T)
    f3 = b * slot_coeffs(a3.conj().T)
    start = {(i3, i2): np.multiply.outer(f3, f2)}
    v = u_apply(i3, a3, start)
    v = u_apply(i2, a2, v)
    v = u_apply(i1, a1, v)
    return v, b


def main():
    ex = {}

    # ----- default_scalar.json: three 2x2 algebras over the scalars --------
    rng = np.random.default_rng([MASTER_SEED, 1])
    rho_psi = [density(rng) for _ in range(3)]
    rho_phi = [rho_psi[0], density(rng), density(rng)]
    for r in rho_psi + rho_phi:
        assert np.linalg.eigvalsh(r).min() > 0.02
    scalar = {
        "description": "three full 2x2 matrix algebras over the scalars; "
                       "index 1 has equal state pair",
        "seed": MASTER_SEED,
        "B": {"basis": [m2j([[1]])]},
        "algebras": [
            {
                "index": k + 1,
                "basis": [m2j(b) for b in M2_BASIS],
                "phi": m2j(rho_phi[k]),
                "psi": m2j(rho_psi[k]),
            }
            for k in range(3)
        ],
    }

    # ----- default_bvalued.json: B = diagonal 2x2, psi = diagonal part -----
    rng = np.random.default_rng([MASTER_SEED, 2])
    diag_embed = [m2j(E11), m2j(E22)]
    diag_map = [m2j(E11), m2j(np.zeros((2, 2))), m2j(np.zeros((2, 2))), m2j(E22)]
    zs = []
    for _ in range(3):
        r = 0.3 + 0.55 * rng.random()
        th = 2 * np.pi * rng.random()
        zs.append(r * np.exp(1j * th))
    bvalued = {
        "description": "three full 2x2 matrix algebras over the diagonal "
                       "subalgebra; psi is the diagonal compression",
        "seed": MASTER_SEED,
        "B": {"basis": [m2j(E11), m2j(E22)]},
        "algebras": [
            {
                "index": k + 1,
                "basis": [m2j(b) for b in M2_BASIS],
                "psi": {"embedding": diag_embed, "map": diag_map},
            }
            for k in range(3)
        ],
        "thetas": [
            {"index": k + 1, "schur": m2j([[1, zs[k]], [np.conj(zs[k]), 1]])}
            for k in range(3)
        ],
    }

    # ----- remark45.json: trace slots and three centered letters -----------
    rng = np.random.default_rng([MASTER_SEED, 3])
    a1 = centered(gauss(rng))
    a1 = a1 / opnorm(a1)
    a2 = centered(gauss(rng))
    a2 = a2 / np.sqrt(trace_state(a2 @ a2.conj().T).real)
    a3 = centered(gauss(rng))
    a3 = a3 / opnorm(a3)
    indices = (1, 3, 2)
    rho_tr = I2 / 2

    remark = {
        "description": "three 2x2 trace-state algebras with a centered "
                       "letter triple for the free-module demo",
        "seed": MASTER_SEED,
        "B": {"basis": [m2j([[1]])]},
        "algebras": [
            {
                "index": k + 1,
                "basis": [m2j(b) for b in M2_BASIS],
                "phi": m2j(rho_tr),
                "psi": m2j(rho_tr),
            }
            for k in range(3)
        ],
        "remark45": {
            "indices": list(indices),
            "letters": [m2j(a1), m2j(a2), m2j(a3)],
        },
    }

    # First-principles demo value, normalized letters (b = 1).
    v, b = demo_value(a1, a2, a3, indices)
    assert set(v.keys()) == {(1,)}, sorted(v.keys())
    gamma = (b ** 2) * trace_state(a3 @ a3.conj().T)
    closed = abs(gamma) * np.sqrt(trace_state(a1.conj().T @ a1).real)
    lhs = vec_norm(v)
    assert abs(lhs - closed) < 1e-12, (lhs, closed)
    # hat(a1) direction check: v[(1,)] == gamma * slot_coeffs(a1)
    assert np.max(np.abs(v[(1,)] - gamma * slot_coeffs(a1))) < 1e-12

    # Non-normalized variant: scale the middle letter so b != 1.
    a2s = 1.3 * a2
    vs, bs = demo_value(a1, a2s, a3, indices)
    assert set(vs.keys()) == {(1,)}
    gammas = (bs ** 2) * trace_state(a3 @ a3.conj().T)
    closeds = abs(gammas) * np.sqrt(trace_state(a1.conj().T @ a1).real)
    lhss = vec_norm(vs)
    assert abs(lhss - closeds) < 1e-12, (lhss, closeds)
    # b-power sensitivity: wrong powers of b give detectably different norms
    for wrong in (1, 3):
        assert abs((bs.real ** wrong / bs.real ** 2) * lhss - lhss) > 1e-3

    ex["normalized"] = {
        "b": float(b.real),
        "gamma": float(gamma.real),
        "norm": float(lhs),
        "psi_a3a3": float(trace_state(a3 @ a3.conj().T).real),
        "psi_a1a1": float(trace_state(a1.conj().T @ a1).real),
    }
    ex["scaled_middle_factor"] = 1.3
    ex["scaled"] = {
        "b": float(bs.real),
        "gamma": float(gammas.real),
        "norm": float(lhss),
    }

    # ----- nested.json: doubled 2x2 ambient algebras over doubled diagonal -
    X = np.array([[0, 1], [1, 0]], dtype=complex)

    def dsum(x, y):
        out = np.zeros((4, 4), dtype=complex)
        out[:2, :2] = x
        out[2:, 2:] = y
        return out

    tilde_basis = [dsum(b, np.zeros((2, 2))) for b in M2_BASIS] + \
                  [dsum(np.zeros((2, 2)), b) for b in M2_BASIS]
    bt_basis = [dsum(E11, E11), dsum(E22, E22)]

    def psit(x, y):
        d = (np.diag(np.diag(x)) + np.diag(np.diag(y))) / 2
        return dsum(d, d)

    psit_map = [m2j(psit(b, np.zeros((2, 2)))) for b in M2_BASIS] + \
               [m2j(psit(np.zeros((2, 2)), b)) for b in M2_BASIS]
    incl = [m2j(dsum(b, X @ b @ X)) for b in M2_BASIS]

    nested = {
        "description": "doubled 2x2 ambient algebras over the doubled "
                       "diagonal, with twisted unital inclusions of the "
                       "trace-state 2x2 family",
        "seed": MASTER_SEED,
        "B": {"basis": [m2j([[1]])]},
        "algebras": [
            {
                "index": k + 1,
                "basis": [m2j(b) for b in M2_BASIS],
                "psi": m2j(rho_tr),
            }
            for k in range(3)
        ],
        "nesting": {
            "Btilde": {"basis": [m2j(b) for b in bt_basis]},
            "algebras": [
                {
                    "index": k + 1,
                    "basis": [m2j(b) for b in tilde_basis],
                    "psi": {"embedding": [m2j(b) for b in bt_basis],
                            "map": psit_map},
                    "inclusion": incl,
                }
                for k in range(3)
            ],
        },
    }

    # ----- thm47.json: CP transfer scenario ---------------------------------
    rng = np.random.default_rng([MASTER_SEED, 4])
    algebras = []
    thetas = []
    for k in range(3):
        rho = density(rng)
        ks = [gauss(rng), gauss(rng)]
        s = sum(K @ K.conj().T for K in ks)
        w, u = np.linalg.eigh(s)
        t = u @ np.diag(w ** -0.5) @ u.conj().T
        ks = [t @ K for K in ks]
        assert np.max(np.abs(sum(K @ K.conj().T for K in ks) - I2)) < 1e-12
        rho_phi = sum(K.conj().T @ rho @ K for K in ks)
        assert np.linalg.eigvalsh(rho_phi).min() > 0.02
        algebras.append({
            "index": k + 1,
            "basis": [m2j(b) for b in M2_BASIS],
            "psi": m2j(rho),
        })
        thetas.append({"index": k + 1, "kraus": [m2j(K) for K in ks]})
    thm47 = {
        "description": "three 2x2 algebras with unital completely positive "
                       "maps given by two Kraus operators each",
        "seed": MASTER_SEED,
        "B": {"basis": [m2j([[1]])]},
        "algebras": algebras,
        "thetas": thetas,
    }

    files = {
        "scenarios/default_scalar.json": scalar,
        "scenarios/default_bvalued.json": bvalued,
        "scenarios/remark45.json": remark,
        "scenarios/nested.json": nested,
        "scenarios/thm47.json": thm47,
    }
    for path, data in files.items():
        with open(path, "w") as f:
            json.dump(data, f, indent=1)
            f.write("\n")

    with open("tools/remark45_expected.json", "w") as f:
        json.dump(ex, f, indent=1)
        f.write("\n")

    print(json.dumps(ex, indent=1))


if __name__ == "__main__":
    main()
