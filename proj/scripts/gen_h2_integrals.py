"""Writes H2/STO-3G integral files (FCIDUMP) for the bundled bond lengths.

Requires pyscf. Only needed to regenerate data/integrals; the files are
checked in.
"""
import pathlib
import sys

from pyscf import gto, scf, tools

BOND_LENGTHS = [0.5, 0.735, 1.0, 1.5]


def main(out_dir):
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for bl in BOND_LENGTHS:
        mol = gto.M(atom=f"H 0 0 0; H 0 0 {bl}", basis="sto-3g", unit="Angstrom", verbose=0)
        mf = scf.RHF(mol).run()
        path = out / f"h2_sto3g_{bl:.3f}.fcidump"
        tools.fcidump.from_scf(mf, str(path), tol=1e-15)
        print(path, mf.e_tot)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/integrals")
