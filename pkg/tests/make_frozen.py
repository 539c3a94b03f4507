"""Regenerate tests/data/frozen.json from the independent oracles.

Run from the repository root: ``python3 tests/make_frozen.py``.
"""

import json
from pathlib import Path

import mpmath as mp
import numpy as np

import oracles as O

OUT = Path(__file__).parent / "data" / "frozen.json"

FAMILIES = {
    "factorial": {"kind": "factorial"},
    "gamma0.5": {"kind": "gamma", "s": 0.5},
    "gamma0.8": {"kind": "gamma", "s": 0.8},
    "gamma1.5": {"kind": "gamma", "s": 1.5},
    "gamma2": {"kind": "gamma", "s": 2.0},
    "gevrey1_1": {"kind": "gevrey_log", "alpha": 1.0, "beta": 1.0},
    "gevrey0.5_1": {"kind": "gevrey_log", "alpha": 0.5, "beta": 1.0},
}

KERNEL_POINTS = {
    "factorial": [1, 2.5 - 1j, -3, 10j],
    "gamma0.5": [1, 2 + 1j, -2, 1.5j],
    "gamma0.8": [1.5j, 3, -2 + 0.5j],
    "gamma1.5": [2, -1 + 1j],
    "gamma2": [4, -4, 2j],
    "gevrey1_1": [1, 2j, -1.5],
    "gevrey0.5_1": [3 - 1j, 0.5],
}

DELTA_CASES = [
    ("factorial", 1 + 1j, 1, 0.7),
    ("factorial", 3j, 3, -0.4 + 0.9j),
    ("gamma0.5", 2j, 2, 0.5 + 0.5j),
    ("gamma1.5", -1 + 1j, 1, 1.2),
    ("gevrey1_1", 0.5, 2, 1 - 1j),
]

M_CASES = [("factorial", 10.0), ("factorial", 3.5), ("gamma0.5", 2.0), ("gamma0.5", 5.0), ("gevrey1_1", 6.0)]

SYSTEMS = [
    {
        "name": "jordan3_gamma0.5",
        "family": "gamma0.5",
        "blocks": [[0.3 + 0.4j, 2], [-0.5, 1]],
        "S": [[1, 0.5, 0.2], [0.1, 1, -0.3], [0.4, -0.2, 1]],
        "y0": [1, 1j, -0.5],
        "z": [0.7 + 0.2j, -1.5 + 1j, 2.5j],
    },
    {
        "name": "jordan4_gamma0.8",
        "family": "gamma0.8",
        "blocks": [[1j, 3], [-0.7, 1]],
        "S": [[1, 0.3, 0, 0.2], [0.2, 1, 0.4, 0], [0, -0.5, 1, 0.1], [0.3, 0, 0.2, 1]],
        "y0": [0.5, -1, 1j, 2],
        "z": [1.1 - 0.3j, -2],
    },
    {
        "name": "diag_gevrey",
        "family": "gevrey1_1",
        "blocks": [[0.8, 1], [-0.6 + 0.2j, 1]],
        "S": [[1, 0.4], [-0.3, 1]],
        "y0": [1, 2],
        "z": [1.5, -1 + 2j],
    },
]


def c(z):
    z = complex(z)
    return [z.real, z.imag]


def kw(fam):
    d = dict(FAMILIES[fam])
    return {k: v for k, v in d.items() if k != "kind"}, d["kind"]


def main():
    out = {"families": FAMILIES, "kernel": [], "mittag_half": [], "delta": [], "M": [], "log_m": [], "systems": []}
    for fam, pts in KERNEL_POINTS.items():
        args, kind = kw(fam)
        for z in pts:
            out["kernel"].append({"family": fam, "z": c(z), "value": c(O.kernel(kind, z, **args))})
    for z in [1, 2 + 1j, -2, 3j]:
        out["mittag_half"].append({"z": c(z), "value": c(O.mittag_leffler_half(z))})
    for z in [4, -4, 2j]:
        out["kernel"].append({"family": "gamma2", "z": c(z), "value": c(O.mittag_leffler_two(z)), "closed_form": True})
    for fam, lam, h, z in DELTA_CASES:
        args, kind = kw(fam)
        out["delta"].append(
            {"family": fam, "lam": c(lam), "h": h, "z": c(z), "value": c(O.delta_h(kind, lam, h, z, **args))}
        )
    for fam, t in M_CASES:
        args, kind = kw(fam)
        out["M"].append({"family": fam, "t": t, "value": O.associated_M(kind, t, **args)})
    for fam, p in [("factorial", 5), ("gamma0.5", 7), ("gevrey1_1", 3), ("gevrey0.5_1", 40)]:
        args, kind = kw(fam)
        with mp.workdps(40):
            out["log_m"].append({"family": fam, "p": p, "value": float(O.log_m(kind, p, **args))})
    for sysd in SYSTEMS:
        args, kind = kw(sysd["family"])
        A = O.jordan_matrix([(complex(l), k) for l, k in sysd["blocks"]], np.array(sysd["S"], dtype=complex))
        vals = [[c(v) for v in O.series_solution(A, sysd["y0"], z, kind, **args)] for z in sysd["z"]]
        out["systems"].append(
            {
                "name": sysd["name"],
                "family": sysd["family"],
                "A": [[c(v) for v in row] for row in A],
                "y0": [c(v) for v in sysd["y0"]],
                "z": [c(z) for z in sysd["z"]],
                "values": vals,
            }
        )
    OUT.write_text(json.dumps(out, indent=1))


if __name__ == "__main__":
    main()
