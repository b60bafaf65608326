"""Smoke test for the qsts Python extension.

Builds the extension with cargo unless QSTS_SKIP_BUILD is set, then imports
it from a scratch directory and exercises the main entry points.
"""

import cmath
import json
import os
import pathlib
import shutil
import subprocess
import sys
import sysconfig
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def build_extension(dest):
    if not os.environ.get("QSTS_SKIP_BUILD"):
        subprocess.run(
            ["cargo", "build", "--release", "-p", "qsts-py", "--features", "extension-module"],
            cwd=ROOT,
            check=True,
        )
    target = pathlib.Path(os.environ.get("CARGO_TARGET_DIR", ROOT / "target"))
    names = {"linux": "libqsts.so", "darwin": "libqsts.dylib", "win32": "qsts.dll"}
    lib = target / "release" / names.get(sys.platform, "libqsts.so")
    suffix = sysconfig.get_config_var("EXT_SUFFIX") or ".so"
    shutil.copy(lib, dest / f"qsts{suffix}")


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol


def main():
    with tempfile.TemporaryDirectory() as tmp:
        build_extension(pathlib.Path(tmp))
        sys.path.insert(0, tmp)
        import qsts

        psi = qsts.bell_state("psi-", "A", "B")
        h = 1 / 2**0.5
        assert psi.labels == ["A", "B"]
        assert all(close(x, y) for x, y in zip(psi.amplitudes, [0, h, -h, 0]))
        flipped = psi.apply_pauli_pair(0, "A", 1, "B")
        assert all(close(x, y) for x, y in zip(flipped.amplitudes, [0, -h, -h, 0]))
        rho = psi.partial_trace(["A"])
        assert close(rho[0][0], 0.5) and close(rho[0][1], 0)

        secret = qsts.TwoQubitSecret(0.5, 0.5j, -0.5, cmath.exp(0.3j) / 2)
        t = qsts.run_forced(secret, ["psi-", "phi-", "psi+", "psi-"])
        assert t.key == "(1,0,-,-)", t.key
        assert t.corrections == ("U1", "U2")
        assert t.fidelity > 1 - 1e-10

        for kwargs in ({}, {"receiver": "bob"}, {"scheme": "circular", "agents": 3}):
            run = qsts.run_protocol(qsts.TwoQubitSecret.haar_random(4), 11, **kwargs)
            assert run.fidelity > 1 - 1e-10, (kwargs, run)
            assert run.classical_bits_sent["alice"] == 4
            assert json.loads(run.to_json())["fidelity"] == run.fidelity

        rows = qsts.derive_table()
        assert len(rows) == 16 and rows[0][2:] == ("U0", "U0")

        try:
            qsts.TwoQubitSecret(1, 0, 0, 1)
        except qsts.QstsException as e:
            assert "not normalized" in str(e)
        else:
            raise AssertionError("unnormalized secret accepted")

        report = json.loads(qsts.security(3))
        assert report["passed"] and report["distinct_corrections_per_publication"] == 4
        audit = json.loads(qsts.audit_expansion())
        assert audit["block_matches"] == 16
        summary = json.loads(qsts.verify(1, 1))
        assert all(m["passed"] for m in summary["monte_carlo"])
    print("python smoke test passed")


if __name__ == "__main__":
    main()
