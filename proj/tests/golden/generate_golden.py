#!/usr/bin/env python3
"""Freeze golden values for the alignment losses.

Every value here is computed with mpmath at 50 significant digits by
evaluating the definitions with explicit loops. Nothing in this file
depends on the C++ implementation; the C++ tests only read the JSON.

Usage: python3 generate_golden.py [out_dir]
"""
import json
import os
import random
import sys

import mpmath as mp

mp.mp.dps = 50


def rnd_matrix(rng, rows, cols):
    return [[round(rng.uniform(-1.0, 1.0), 4) for _ in range(cols)] for _ in range(rows)]


def dot(a, b):
    return mp.fsum(mp.mpf(x) * mp.mpf(y) for x, y in zip(a, b))


def attention_pool(values):
    # sum_i softmax(v)_i * v_i
    m = max(values)
    ws = [mp.e ** (v - m) for v in values]
    z = mp.fsum(ws)
    return mp.fsum(w * v for w, v in zip(ws, values)) / z


def reduce_fn(M):
    p, q = len(M), len(M[0])
    mr = [attention_pool([M[i][j] for i in range(p)]) for j in range(q)]
    mc = [attention_pool([M[i][j] for j in range(q)]) for i in range(p)]
    return (attention_pool(mr) + attention_pool(mc)) / 2


def mean_rows(H):
    T = len(H)
    return [mp.fsum(mp.mpf(H[t][c]) for t in range(T)) / T for c in range(len(H[0]))]


def ih_sim(x_cls, X, h_bar, H, flags=("IT", "WT", "IV", "WV")):
    parts = []
    if "IT" in flags:
        parts.append(dot(h_bar, x_cls))
    if "WT" in flags:
        parts.append(reduce_fn([[dot(x, h_bar) for x in X]]))
    if "IV" in flags:
        parts.append(reduce_fn([[dot(h, x_cls)] for h in H]))
    if "WV" in flags:
        parts.append(reduce_fn([[dot(h, x) for x in X] for h in H]))
    return mp.fsum(parts) / len(parts)


def lo_sim(L, O):
    return reduce_fn([[dot(o, l) for l in L] for o in O])


def ce_row(row, pos, tau=1):
    m = max(row)
    z = mp.fsum(mp.e ** ((v - m) / tau) for v in row)
    return -((row[pos] - m) / tau - mp.log(z))


def ce(S, tau=1):
    return mp.fsum(ce_row(S[i], i, tau) for i in range(len(S))) / len(S)


def transpose(S):
    return [list(r) for r in zip(*S)]


def instance(rng, d, m, n, T, k):
    H = rnd_matrix(rng, T, d)
    return {
        "x_cls": [round(rng.uniform(-1.0, 1.0), 4) for _ in range(d)],
        "X": rnd_matrix(rng, m, d),
        "L": rnd_matrix(rng, n, d),
        "H": H,
        "O": [rnd_matrix(rng, k, d) for _ in range(T)],
    }


def level_ih(batch, flags=("IT", "WT", "IV", "WV")):
    B = len(batch)
    hb = [mean_rows(b["H"]) for b in batch]
    S = [[ih_sim(batch[i]["x_cls"], batch[i]["X"], hb[j], batch[j]["H"], flags)
          for j in range(B)] for i in range(B)]
    return ce(S) + ce(transpose(S))


def level_lo(batch):
    B = len(batch)
    Ts = [len(b["O"]) for b in batch]
    per_episode = [mp.mpf(0)] * B
    for t in range(max(Ts)):
        group = [i for i in range(B) if Ts[i] > t]
        if len(group) < 2:
            continue
        S = [[lo_sim(batch[i]["L"], batch[j]["O"][t]) for j in group] for i in group]
        St = transpose(S)
        for a, i in enumerate(group):
            per_episode[i] += ce_row(S[a], a) + ce_row(St[a], a)
    return mp.fsum(per_episode[i] / Ts[i] for i in range(B)) / B


def level_single(batch):
    B = len(batch)
    V = []
    for b in batch:
        rows = [list(r) for r in b["H"]]
        for Ot in b["O"]:
            rows.extend(list(r) for r in Ot)
        V.append(rows)
    vb = [mean_rows(v) for v in V]
    S = [[ih_sim(batch[i]["x_cls"], batch[i]["X"], vb[j], V[j]) for j in range(B)]
         for i in range(B)]
    return ce(S) + ce(transpose(S))


def record(oracle_id, inputs, expected):
    return {
        "oracle_id": oracle_id,
        "precision": "mpmath-50",
        "inputs": inputs,
        "expected": float(expected) if not isinstance(expected, list) else expected,
    }


def main():
    out_dir = sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__))
    rng = random.Random(20240521)
    records = []

    records.append(record("masked_softmax_two", {"v": [0, 1], "mask": [1, 1]},
                          [float(1 / (1 + mp.e)), float(mp.e / (1 + mp.e))]))
    records.append(record("reduce_antidiagonal", {"M": [[0, 1], [1, 0]]},
                          reduce_fn([[0, 1], [1, 0]])))
    S2 = [[1, 0], [0, 1]]
    records.append(record("contrastive_b2", {"S": S2, "tau": 1}, ce(S2) + ce(transpose(S2))))

    inst = instance(rng, d=2, m=2, n=1, T=2, k=1)
    records.append(record("ih_sim_d2_m2_t2",
                          {"x_cls": inst["x_cls"], "X": inst["X"], "H": inst["H"]},
                          ih_sim(inst["x_cls"], inst["X"], mean_rows(inst["H"]), inst["H"])))

    L = rnd_matrix(rng, 2, 3)
    O = rnd_matrix(rng, 3, 3)
    records.append(record("lo_sim_n2_k3", {"L": L, "O": O}, lo_sim(L, O)))

    batch3 = [instance(rng, d=3, m=rng.randint(1, 4), n=2, T=rng.randint(1, 3), k=2)
              for _ in range(3)]
    records.append(record("level_ih_b3", {"batch": batch3}, level_ih(batch3)))
    records.append(record("level_ih_b3_only_wv", {"batch": batch3, "flags": ["WV"]},
                          level_ih(batch3, flags=("WV",))))

    ragged = [instance(rng, d=3, m=3, n=2, T=2, k=3), instance(rng, d=3, m=2, n=1, T=1, k=3)]
    records.append(record("level_lo_ragged_t2_t1", {"batch": ragged}, level_lo(ragged)))

    single = [instance(rng, d=3, m=2, n=1, T=2, k=2), instance(rng, d=3, m=3, n=1, T=1, k=2)]
    records.append(record("single_level_b2", {"batch": single}, level_single(single)))

    # queue simulation: 100 pushes of 8 into capacity 480
    sizes, size = [], 0
    for _ in range(100):
        size = min(size + 8, 480)
        sizes.append(size)
    records.append({"oracle_id": "bank_sizes_100x8_cap480", "precision": "exact",
                    "inputs": {"pushes": 100, "batch": 8, "capacity": 480},
                    "expected": sizes})

    path = os.path.join(out_dir, "alignment_golden.json")
    with open(path, "w") as fh:
        json.dump(records, fh, indent=1)
        fh.write("\n")
    print(f"wrote {len(records)} records to {path}")


if __name__ == "__main__":
    main()
