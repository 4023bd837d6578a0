"""Probe the asymmetric full-support aux family for the degree ladder."""
import sys, time
import numpy as np
sys.path.insert(0, "src")
from probe_c7_search import make_aux, info, MAPS, pooled
from graphbc.broadcast import ChannelCodeConfig, blackwell_channel, build_channel_code

CH = blackwell_channel()
UREV = MAPS["urev"]

JOINTS = {
    "t45": [[0.45, 0.25], [0.05, 0.25]],
    "t40": [[0.40, 0.25], [0.10, 0.25]],
    "t42": [[0.42, 0.26], [0.06, 0.26]],
    "t48": [[0.48, 0.22], [0.06, 0.24]],
}
SEEDS = range(8)

for jname, joint in JOINTS.items():
    aux = make_aux(joint, UREV)
    i1, i2, iuv = info(aux)
    for eps in (0.30, 0.35, 0.40):
        a = max(0.0, i1 + i2 - iuv - 2 * eps)
        c1 = max(0.0, min(i1 - eps, a))
        c2 = max(0.0, min(i2 - eps, a))
        if c1 + c2 < a - 1e-9 or a <= 0.05:
            continue
        for r2 in (c2, c2 - 0.03, c2 - 0.06):
            if r2 < 0:
                continue
            for bump in (0.0, 0.04):
                r1 = max(0.0, a - r2) + bump
                if r1 > c1 + 1e-12 or r1 + r2 < a - 1e-9:
                    continue
                rows = []
                try:
                    for n in (8, 10, 12):
                        fr = []
                        for seed in SEEDS:
                            cbk, dg = build_channel_code(
                                CH, ChannelCodeConfig(n, eps, 1.0, 0.0, r1, r2, aux, seed=seed))
                            fr.append(pooled(cbk, dg))
                        rows.append(sum(fr) / len(fr))
                except Exception:
                    continue
                v8, v10, v12 = rows
                flag = " <<<" if v8 > v10 > v12 and v12 < 0.02 and (v8 - v10) > 0.05 else ""
                print(f"{jname} eps={eps:.2f} r=({r1:.4f},{r2:.4f}) "
                      f"v=({v8:.4f},{v10:.4f},{v12:.4f}){flag}")
