"""Refine the degree-ladder candidates with more seeds."""
import sys, time
import numpy as np
sys.path.insert(0, "src")
from probe_c7_search import make_aux, info, MAPS, sym, pooled
from graphbc.broadcast import ChannelCodeConfig, blackwell_channel, build_channel_code

CH = blackwell_channel()
UREV = MAPS["urev"]

cands = []
for a, eps_list, r1_list, r2_list in [
    (0.400, (0.28, 0.30, 0.32), (0.40, 0.42, 0.44, 0.47), (0.28, 0.30, 0.31)),
    (0.400, (0.40, 0.42, 0.44), (0.28, 0.30, 0.32), (0.17, 0.19, 0.21)),
    (0.425, (0.30, 0.34, 0.38), (0.38, 0.42, 0.46), (0.24, 0.27, 0.30)),
]:
    for eps in eps_list:
        for r1 in r1_list:
            for r2 in r2_list:
                cands.append((a, eps, r1, r2))

t0 = time.time()
rows_out = []
for a, eps, r1, r2 in cands:
    aux = make_aux(sym(a), UREV)
    rows = []
    try:
        for n in (8, 10, 12):
            fr = []
            for seed in range(10):
                cbk, diag = build_channel_code(
                    CH, ChannelCodeConfig(n, eps, 1.0, 0.0, r1, r2, aux, seed=seed))
                fr.append(pooled(cbk, diag))
            rows.append((sum(fr) / len(fr), max(fr)))
    except Exception as exc:
        continue
    (m8, x8), (m10, x10), (m12, x12) = rows
    if m10 <= m8 and m12 <= m10 and m12 < 0.10:
        rows_out.append((m12, m10, m8, x12, a, eps, r1, r2))
rows_out.sort(key=lambda t: (t[0], t[1]))
print(f"{time.time()-t0:.0f}s; {len(rows_out)} monotone candidates; best 12:")
for m12, m10, m8, x12, a, eps, r1, r2 in rows_out[:12]:
    print(f"  a={a} eps={eps} r=({r1},{r2}) means=({m8:.3f},{m10:.3f},{m12:.3f}) worst12={x12:.3f}")
