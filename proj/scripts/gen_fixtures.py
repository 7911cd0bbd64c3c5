"""Dense-diagonalization oracle for the pinned regression constants.

Builds every Hamiltonian from explicit Kronecker products in numpy (no code
shared with the C++ library) and writes data/fixtures/regression.json.

Conventions mirrored from the library:
  * qubit q is bit q of the basis index (little endian);
  * Jordan-Wigner: a_j = Z_0 ... Z_{j-1} (X_j + iY_j)/2, so an occupied mode
    is the |1> state;
  * spin orbital of (site/orbital p, spin s) is 2p + s.

Usage: python3 scripts/gen_fixtures.py [repo_root]
"""
import datetime
import itertools
import json
import math
import pathlib
import sys

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
LOWER = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|, removes a particle


def embed(ops, n):
    """Kronecker product with ops[q] acting on qubit q (qubit 0 = LSB)."""
    out = np.array([[1.0 + 0j]])
    for q in reversed(range(n)):
        out = np.kron(out, ops.get(q, I2))
    return out


def annihilator(j, n):
    ops = {k: Z for k in range(j)}
    ops[j] = LOWER
    return embed(ops, n)


def tfim(L, J, h):
    n = L
    H = np.zeros((2**n, 2**n), dtype=complex)
    for i in range(L - 1):
        H -= J * embed({i: Z, i + 1: Z}, n)
    for i in range(L):
        H -= h * embed({i: X}, n)
    return H


def sector_indices(n_spatial, n_up, n_down):
    idx = []
    for b in range(4**n_spatial):
        up = sum((b >> (2 * p)) & 1 for p in range(n_spatial))
        dn = sum((b >> (2 * p + 1)) & 1 for p in range(n_spatial))
        if up == n_up and dn == n_down:
            idx.append(b)
    return idx


def hubbard(L, t, U):
    n = 2 * L
    a = [annihilator(j, n) for j in range(n)]
    H = np.zeros((2**n, 2**n), dtype=complex)
    for i in range(L - 1):
        for s in range(2):
            p, q = 2 * i + s, 2 * (i + 1) + s
            H -= t * (a[p].conj().T @ a[q] + a[q].conj().T @ a[p])
    for i in range(L):
        nu = a[2 * i].conj().T @ a[2 * i]
        nd = a[2 * i + 1].conj().T @ a[2 * i + 1]
        H += U * nu @ nd
    return H


def schwinger(L, w, g, m):
    n = L
    H = np.zeros((2**n, 2**n), dtype=complex)
    sp = (X - 1j * Y) / 2  # sigma+ = |0><1|
    sm = (X + 1j * Y) / 2
    for k in range(L - 1):
        hop = embed({k: sp, k + 1: sm}, n)
        H += w * (hop + hop.conj().T)
    for k in range(L):
        H += (m / 2) * (-1) ** k * embed({k: Z}, n)
    for k in range(L - 1):
        Lk = np.zeros_like(H)
        for j in range(k + 1):
            Lk += 0.5 * (embed({j: Z}, n) + (-1) ** j * np.eye(2**n))
        H += g * Lk @ Lk
    return H


def schwinger_vacuum(L):
    idx = sum(1 << k for k in range(0, L, 2))
    psi = np.zeros(2**L, dtype=complex)
    psi[idx] = 1.0
    return psi


def particle_number(L):
    O = np.zeros((2**L, 2**L), dtype=complex)
    for k in range(L):
        O += ((-1) ** k * embed({k: Z}, L) + np.eye(2**L)) / 2
    return O / L


def evolve_eig(H, psi, T):
    e, v = np.linalg.eigh(H)
    return v @ (np.exp(-1j * e * T) * (v.conj().T @ psi))


def evolve_rk4(H, psi, T, steps):
    dt = T / steps
    f = lambda y: -1j * (H @ y)
    y = psi.copy()
    for _ in range(steps):
        k1 = f(y)
        k2 = f(y + dt / 2 * k1)
        k3 = f(y + dt / 2 * k2)
        k4 = f(y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def read_fcidump(path):
    text = pathlib.Path(path).read_text()
    header, body = text.split("&END", 1)
    norb = int(header.split("NORB=")[1].split(",")[0])
    nelec = int(header.split("NELEC=")[1].split(",")[0])
    h1 = np.zeros((norb, norb))
    h2 = np.zeros((norb,) * 4)
    core = 0.0
    for line in body.strip().splitlines():
        v, i, j, k, l = line.split()
        v = float(v)
        i, j, k, l = int(i), int(j), int(k), int(l)
        if i == j == k == l == 0:
            core = v
        elif k == l == 0:
            h1[i - 1, j - 1] = h1[j - 1, i - 1] = v
        else:
            p, q, r, s = i - 1, j - 1, k - 1, l - 1
            for a, b, c, d in [(p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
                               (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p)]:
                h2[a, b, c, d] = v
    return norb, nelec, core, h1, h2


def molecular(norb, core, h1, h2):
    n = 2 * norb
    a = [annihilator(j, n) for j in range(n)]
    ad = [x.conj().T for x in a]
    H = core * np.eye(2**n, dtype=complex)
    for p, q in itertools.product(range(norb), repeat=2):
        for s in range(2):
            H += h1[p, q] * ad[2 * p + s] @ a[2 * q + s]
    for p, q, r, s in itertools.product(range(norb), repeat=4):
        if h2[p, q, r, s] == 0.0:
            continue
        for si, ti in itertools.product(range(2), repeat=2):
            H += 0.5 * h2[p, q, r, s] * (ad[2 * p + si] @ ad[2 * r + ti]
                                         @ a[2 * s + ti] @ a[2 * q + si])
    return H


def sector_min(H, idx):
    sub = H[np.ix_(idx, idx)]
    return float(np.linalg.eigvalsh(sub)[0])


def main(root):
    root = pathlib.Path(root)
    doc = json.loads((root / "data/instances/bundled.json").read_text())
    integrals_dir = (root / "data/instances" / doc.get("integrals_dir", "../integrals")).resolve()
    instances = {}
    for inst in doc["instances"]:
        d, p = inst["descriptor"], inst["params"]
        if d == "condensedmatter/tfim":
            value = float(np.linalg.eigvalsh(tfim(p["L"], p["J"], p["h"]))[0])
        elif d == "condensedmatter/hubbard":
            L = p["L"]
            n_up, n_dn = p.get("n_up", (L + 1) // 2), p.get("n_down", L // 2)
            value = sector_min(hubbard(L, p["t"], p["U"]), sector_indices(L, n_up, n_dn))
        elif d == "optimization/maxcut":
            N = p["N"]
            best = 0.0
            for bits in itertools.product([0, 1], repeat=N):
                best = max(best, sum(w for u, v, w in p["E"] if bits[u] != bits[v]))
            value = best
        elif d == "gauge/schwinger":
            L = p["L"]
            H = schwinger(L, p["h"], p["g"], p.get("m", 0.5))
            psi = evolve_eig(H, schwinger_vacuum(L), p.get("T", 1.0))
            value = float(np.real(psi.conj() @ particle_number(L) @ psi))
        elif d == "chem/h2":
            path = integrals_dir / f"h2_sto3g_{p['BL']:.3f}.fcidump"
            norb, nelec, core, h1, h2 = read_fcidump(path)
            H = molecular(norb, core, h1, h2)
            value = sector_min(H, sector_indices(norb, nelec // 2, nelec // 2))
        else:
            raise ValueError(d)
        instances[inst["id"]] = value

    # Schwinger L=4, h=1, g=1, m=0.5: ground energy and T=1 dynamics, with
    # an RK4 cross-check of the eigenbasis propagation.
    H = schwinger(4, 1.0, 1.0, 0.5)
    ground = float(np.linalg.eigvalsh(H)[0])
    psi_eig = evolve_eig(H, schwinger_vacuum(4), 1.0)
    psi_rk4 = evolve_rk4(H, schwinger_vacuum(4), 1.0, 4000)
    O = particle_number(4)
    n_eig = float(np.real(psi_eig.conj() @ O @ psi_eig))
    n_rk4 = float(np.real(psi_rk4.conj() @ O @ psi_rk4))
    assert abs(n_eig - n_rk4) < 1e-10, (n_eig, n_rk4)

    h2_ref = {}
    for bl in (0.5, 0.735, 1.0, 1.5):
        norb, nelec, core, h1, h2 = read_fcidump(integrals_dir / f"h2_sto3g_{bl:.3f}.fcidump")
        H = molecular(norb, core, h1, h2)
        idx = sector_indices(norb, 1, 1)
        hf = 0b0011  # orbital 0, both spins
        h2_ref[f"{bl:.3f}"] = {
            "fci_energy": sector_min(H, idx),
            "reference_determinant_energy": float(np.real(H[hf, hf])),
            "n_determinants": len(idx),
        }

    out = {
        "generated_by": "scripts/gen_fixtures.py (numpy dense diagonalization)",
        "generated_at": datetime.date.today().isoformat(),
        "numpy_version": np.__version__,
        "schwinger_L4_h1_g1_m0.5": {
            "ground_energy": ground,
            "particle_number_T1": n_eig,
            "particle_number_T1_rk4": n_rk4,
        },
        "h2_sto3g": h2_ref,
        "tfim_L2_J1_h1": -math.sqrt(5.0),
        "instances": instances,
    }
    path = root / "data/fixtures/regression.json"
    path.write_text(json.dumps(out, indent=2) + "\n")
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else ".")
