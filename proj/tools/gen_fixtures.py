#!/usr/bin/env python3
"""Writes the bench netlists and plans under tests/fixtures.

Output is a pure function of the seeds below; rerunning must not change any
file. The case-study netlists are synthetic stand-ins with the block port
widths of the reference decoder core (bn 54/55, cn 53/53, cu 45/44).
"""

import argparse
import json
import random
from pathlib import Path

KINDS = [("XOR", 30), ("AND", 18), ("OR", 18), ("NAND", 12), ("NOR", 12), ("XNOR", 5), ("NOT", 5)]
POLY16 = "x^16+x^15+x^13+x^4+1"
POLY2 = "x^2+x+1"


def pick_kind(rng):
    total = sum(w for _, w in KINDS)
    r = rng.randrange(total)
    for kind, w in KINDS:
        if r < w:
            return kind
        r -= w
    raise AssertionError


class Builder:
    def __init__(self, prefix):
        self.prefix = prefix
        self.inputs = []
        self.outputs = []
        self.gates = []  # (out, kind, [ins])
        self.count = 0

    def net(self):
        self.count += 1
        return f"{self.prefix}_n{self.count}"

    def gate(self, kind, ins, out=None):
        out = out or self.net()
        self.gates.append((out, kind, list(ins)))
        return out


def random_block(rng, prefix, n_in, n_out, cg_width, layers, width):
    """Layered random logic; select inputs steer the output stage."""
    b = Builder(prefix)
    sel = [f"{prefix}_sel{i}" for i in range(cg_width)]
    data = [f"{prefix}_d{i}" for i in range(n_in - cg_width)]
    b.inputs = sel + data
    unused = list(data)
    pool = list(data)
    prev = list(data)
    for _ in range(layers):
        layer = []
        for _ in range(width):
            kind = pick_kind(rng)
            arity = 1 if kind == "NOT" else rng.choice([2, 2, 2, 3])
            ins = []
            while len(ins) < arity:
                if unused and rng.random() < 0.6:
                    cand = unused.pop(rng.randrange(len(unused)))
                elif rng.random() < 0.7:
                    cand = rng.choice(prev)
                else:
                    cand = rng.choice(pool)
                if cand not in ins:
                    ins.append(cand)
            layer.append(b.gate(kind, ins))
        unused.extend(layer)
        pool.extend(layer)
        prev = layer

    enables = []
    if cg_width:
        # One-hot-ish mode decode over the select port.
        for i in range(cg_width):
            enables.append(sel[i])
        for i in range(cg_width - 1):
            enables.append(b.gate("AND", [sel[i], sel[i + 1]]))
    late = pool[-3 * width:]
    for j in range(n_out):
        a = unused.pop(rng.randrange(len(unused))) if unused else rng.choice(late)
        c = rng.choice(late)
        while c == a:
            c = rng.choice(late)
        out = f"{prefix}_o{j}"
        if enables:
            en = enables[j % len(enables)]
            x = b.gate("AND", [a, en])
            nen = b.gate("NOT", [en])
            y = b.gate("AND", [c, nen])
            b.gate("OR", [x, y], out)
        else:
            b.gate(rng.choice(["XOR", "XNOR", "OR", "AND"]), [a, c], out)
        b.outputs.append(out)
    return b


def bench_text(title, blocks, declare_blocks):
    lines = [f"# {title}"]
    for b in blocks:
        lines += [f"INPUT({n})" for n in b.inputs]
    for b in blocks:
        lines += [f"OUTPUT({n})" for n in b.outputs]
    if declare_blocks:
        for b in blocks:
            lines.append(f"#@block {b.prefix} in: {','.join(b.inputs)} out: {','.join(b.outputs)}")
    for b in blocks:
        lines += [f"{out} = {kind}({', '.join(ins)})" for out, kind, ins in b.gates]
    return "\n".join(lines) + "\n"


SEL_SCHEDULE = [("1111", 3072), ("0111", 512), ("0011", 256), ("0001", 256)]


def case_study_plan(blocks):
    bindings, misrs = [], []
    for b in blocks:
        entry = {"block": b.prefix, "width": len(b.inputs), "alfsr_map": "modular"}
        if b.prefix in ("bn", "cn"):
            entry["cg"] = "sel"
            entry["cg_bits"] = [0, 1, 2, 3]
        bindings.append(entry)
        misrs.append({"block": b.prefix, "poly": POLY16, "fold": "modular", "in_width": len(b.outputs)})
    return {
        "schema_version": 1,
        "alfsr": {"poly": "x^20+x^3+1", "seed": "0x5a5a5", "configuration": "fibonacci"},
        "counter_width": 12,
        "pattern_count": 4096,
        "cgs": [{"name": "sel", "width": 4, "cyclic": False,
                 "schedule": [{"value": v, "hold": h} for v, h in SEL_SCHEDULE]}],
        "bindings": bindings,
        "misrs": misrs,
    }


AND2 = """# two-input AND
INPUT(a)
INPUT(b)
OUTPUT(y)
y = AND(a, b)
"""

TEN_GATE = """# ten gates, five inputs
INPUT(a)
INPUT(b)
INPUT(c)
INPUT(d)
INPUT(e)
OUTPUT(y1)
OUTPUT(y2)
OUTPUT(y3)
n1 = NAND(a, b)
n2 = NOR(b, c)
n3 = XOR(c, d)
n4 = AND(n1, e)
n5 = OR(n2, n3)
n6 = NOT(n4)
n7 = XNOR(n5, a)
y1 = AND(n6, n7)
y2 = OR(n4, n3)
y3 = NAND(n7, d)
"""

SEVENTEEN_GATE = """# seventeen gates, eight inputs
INPUT(a)
INPUT(b)
INPUT(c)
INPUT(d)
INPUT(e)
INPUT(f)
INPUT(g)
INPUT(h)
OUTPUT(y1)
OUTPUT(y2)
OUTPUT(y3)
g1 = AND(a, b)
g2 = OR(c, d)
g3 = NAND(e, f)
g4 = NOR(g, h)
g5 = XOR(a, c)
g6 = AND(g1, g2)
g7 = OR(g3, g4)
g8 = NOT(g5)
g9 = NAND(g6, e)
g10 = XOR(g7, b)
g11 = AND(g8, h)
g12 = OR(g9, g10)
g13 = NOR(g11, f)
g14 = BUF(g12)
y1 = AND(g14, g13)
y2 = XNOR(g10, g11)
y3 = OR(g6, g4)
"""

SEQUENTIAL = """# 3-bit shift/accumulate loop
INPUT(a)
INPUT(b)
OUTPUT(y)
OUTPUT(z)
q0 = DFF(d0)
q1 = DFF(d1)
q2 = DFF(d2)
d0 = XOR(a, q2)
d1 = AND(q0, b)
t = OR(q1, a)
d2 = XOR(t, q0)
y = NAND(q2, b)
z = XOR(q1, q0)
"""


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "tests" / "fixtures"))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rng = random.Random(20240601)
    bn = random_block(rng, "bn", 54, 55, 4, layers=6, width=60)
    cn = random_block(rng, "cn", 53, 53, 4, layers=6, width=55)
    cu = random_block(rng, "cu", 45, 44, 0, layers=5, width=50)
    blocks = [bn, cn, cu]
    for b in blocks:
        (out / f"ldpc_like_{b.prefix}.bench").write_text(
            bench_text(f"synthetic {b.prefix} block, {len(b.inputs)} in / {len(b.outputs)} out", [b], True))
    (out / "ldpc_like_core.bench").write_text(bench_text("synthetic three-block decoder core", blocks, True))
    (out / "ldpc_like_core.plan.json").write_text(json.dumps(case_study_plan(blocks), indent=2) + "\n")

    mid = random_block(random.Random(7), "m", 16, 8, 0, layers=4, width=16)
    (out / "mid.bench").write_text(bench_text("random 16 in / 8 out", [mid], False))
    (out / "mid_misr2.plan.json").write_text(json.dumps({
        "schema_version": 1,
        "alfsr": {"poly": "x^20+x^3+1", "seed": "0x5a5a5", "configuration": "fibonacci"},
        "counter_width": 12,
        "pattern_count": 1024,
        "cgs": [],
        "bindings": [{"block": "mid", "width": 16, "alfsr_map": "modular"}],
        "misrs": [{"block": "mid", "poly": POLY2, "fold": "modular", "in_width": 8}],
    }, indent=2) + "\n")

    (out / "and2.bench").write_text(AND2)
    (out / "ten_gate.bench").write_text(TEN_GATE)
    (out / "seventeen_gate.bench").write_text(SEVENTEEN_GATE)
    (out / "seq3.bench").write_text(SEQUENTIAL)
    (out / "undriven.bench").write_text("INPUT(a)\nOUTPUT(y)\ny = AND(a, b)\n")
    (out / "empty.bench").write_text("")
    (out / "and2.patterns").write_text("# b a\n00\n01\n10\n11\n")
    (out / "and2_wide.patterns").write_text("001\n")


if __name__ == "__main__":
    main()
