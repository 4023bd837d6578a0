"""Empirically verify top analytic candidates with the real build."""
import sys, time
import numpy as np
sys.path.insert(0, "src")
from graphbc.probability import ConditionalPmf, FiniteAlphabet, JointPmf
from graphbc.broadcast import AuxChain, ChannelCodeConfig, blackwell_channel, build_channel_code

CH = blackwell_channel()

def make_aux(joint):
    z, b, x = FiniteAlphabet(1), FiniteAlphabet(2), FiniteAlphabet(3)
    pz = JointPmf((z,), np.array([1.0]))
    puv = ConditionalPmf((z,), (b, b), np.asarray(joint, float).reshape(1, 2, 2))
    px = np.zeros((1, 2, 2, 3))
    px[0,0,0,0] = 1.0; px[0,0,1,1] = 1.0; px[0,1,0,2] = 1.0; px[0,1,1,2] = 1.0
    return AuxChain(pz, puv, ConditionalPmf((z, b, b), (x,), px))

CANDS = [
    ([[0.46, 0.275], [0.04, 0.225]], 0.26, 0.5475, 0.4843),
    ([[0.30, 0.100], [0.04, 0.560]], 0.28, 0.4427, 0.3436),
    ([[0.38, 0.125], [0.04, 0.455]], 0.28, 0.4867, 0.4075),
    ([[0.30, 0.100], [0.04, 0.560]], 0.28, 0.4127, 0.3436),
    ([[0.30, 0.200], [0.04, 0.460]], 0.28, 0.5317, 0.4036),
    ([[0.28, 0.225], [0.04, 0.455]], 0.26, 0.5667, 0.4215),
    ([[0.40, 0.100], [0.04, 0.460]], 0.28, 0.4325, 0.4176),
    ([[0.44, 0.300], [0.04, 0.220]], 0.24, 0.5797, 0.5010),
]

for J, eps, r1, r2 in CANDS:
    aux = make_aux(J)
    rows, t0 = [], time.time()
    try:
        for n in (8, 10, 12):
            fr = []
            for seed in range(8):
                cbk, dg = build_channel_code(
                    CH, ChannelCodeConfig(n, eps, 1.0, 0.0, r1, r2, aux, seed=seed))
                g = cbk.graph
                bad = len(dg.degree_report.left_violations) + len(dg.degree_report.right_violations)
                fr.append(bad / (g.v1_size + g.v2_size))
            rows.append(sum(fr) / len(fr))
    except Exception as exc:
        print(f"J={J} eps={eps} r=({r1},{r2}) FAILED: {exc}")
        continue
    v8, v10, v12 = rows
    mono = "MONO" if v8 > v10 > v12 else "    "
    print(f"J={J} eps={eps} r=({r1:.4f},{r2:.4f}) "
          f"v=({v8:.4f},{v10:.4f},{v12:.4f}) {mono} ({time.time()-t0:.1f}s)")
