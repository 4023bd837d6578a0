"""Screen auxiliary chains / eps / rates for the degree-concentration ladder."""
import itertools, math, sys, time
import numpy as np
sys.path.insert(0, "src")
from graphbc.probability import ConditionalPmf, FiniteAlphabet, JointPmf, compose_chain, mutual_information
from graphbc.broadcast import AuxChain, ChannelCodeConfig, blackwell_channel, build_channel_code

CH = blackwell_channel()

def make_aux(joint, xmap):
    z, b, x = FiniteAlphabet(1), FiniteAlphabet(2), FiniteAlphabet(3)
    pz = JointPmf((z,), np.array([1.0]))
    puv = ConditionalPmf((z,), (b, b), np.asarray(joint, float).reshape(1, 2, 2))
    px = np.zeros((1, 2, 2, 3))
    for (u, v), w in xmap.items():
        px[0, u, v, :] = w
    return AuxChain(pz, puv, ConditionalPmf((z, b, b), (x,), px))

def info(aux):
    joint = compose_chain(aux.pz, aux.puv_given_z, aux.px_given_zuv, CH.transition)
    i1 = mutual_information(joint, (1,), (4,), given=(0,))
    i2 = mutual_information(joint, (2,), (5,), given=(0,))
    iuv = mutual_information(joint, (1,), (2,), given=(0,))
    return i1, i2, iuv

E = {0: (1,0,0), 1: (0,1,0), 2: (0,0,1)}
MAPS = {
    "adder":   {(0,0): E[0], (0,1): E[1], (1,0): E[1], (1,1): E[2]},
    "urev":    {(0,0): E[0], (0,1): E[1], (1,0): E[2], (1,1): E[2]},
}
def sym(a):
    return [[a, 0.5 - a], [0.5 - a, a]]
JOINTS = {
    "s350": sym(0.350), "s375": sym(0.375), "s400": sym(0.400),
    "a41":  [[0.40, 0.10], [0.20, 0.30]],
    "a45":  [[0.45, 0.05], [0.20, 0.30]],
}
EPSES = [0.30, 0.34, 0.38, 0.42]

def rate_pairs(i1, i2, iuv, eps):
    a = max(0.0, i1 + i2 - iuv - 2 * eps)
    c1 = max(0.0, min(i1 - eps, a))
    c2 = max(0.0, min(i2 - eps, a))
    if c1 + c2 < a - 1e-9 or a <= 0.05:
        return []
    s = c1 + c2 - a
    out = [(c1, c2, a)]
    for lam in (0.5, 1.0):
        out.append((c1 - lam * s / 2, c2 - lam * s / 2, a))
    out.append((max(0.0, a - c2), c2, a))            # strong side down, weak at cap
    out.append((max(0.0, a - c2) + 0.4 * s, c2, a))  # partway
    ded = []
    for r1, r2, aa in out:
        r1, r2 = max(r1, 0.0), max(r2, 0.0)
        if r1 + r2 < aa - 1e-9:
            continue
        if all(abs(r1-q[0]) + abs(r2-q[1]) > 1e-6 for q in ded):
            ded.append((r1, r2, aa))
    return ded

def pooled(cbk, diag):
    g = cbk.graph
    bad = len(diag.degree_report.left_violations) + len(diag.degree_report.right_violations)
    return bad / (g.v1_size + g.v2_size)

results, built, failed = [], 0, 0
t0 = time.time()
for (mname, xmap), (jname, joint) in itertools.product(MAPS.items(), JOINTS.items()):
    aux = make_aux(joint, xmap)
    i1, i2, iuv = info(aux)
    for eps in EPSES:
        for r1, r2, a in rate_pairs(i1, i2, iuv, eps):
            rows, bad = [], False
            for n in (8, 10, 12):
                fr = []
                for seed in (0, 1, 2):
                    try:
                        cfg = ChannelCodeConfig(n, eps, 1.0, 0.0, r1, r2, aux, seed=seed)
                        cbk, diag = build_channel_code(CH, cfg)
                        built += 1
                    except Exception:
                        failed += 1
                        bad = True
                        break
                    fr.append(pooled(cbk, diag))
                if bad:
                    break
                rows.append(sum(fr) / len(fr))
            if bad:
                continue
            v8, v10, v12 = rows
            ok = v10 <= v8 + 0.02 and v12 <= v10 + 0.02 and v12 < 0.10
            results.append((ok, v8, v10, v12, mname, jname, eps, r1, r2))
print(f"pass 1: {time.time()-t0:.0f}s, {built} builds ok, {failed} failed, {len(results)} configs")
keep = [r for r in results if r[0]]
keep.sort(key=lambda r: (r[3] + r[2], -(r[1] - r[2])))
print(f"{len(keep)} shape-ok; top 15:")
for r in keep[:15]:
    _, v8, v10, v12, mn, jn, eps, r1, r2 = r
    print(f"  {mn}/{jn} eps={eps} r=({r1:.4f},{r2:.4f}) v=({v8:.3f},{v10:.3f},{v12:.3f})")
