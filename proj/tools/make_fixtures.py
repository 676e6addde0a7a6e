#!/usr/bin/env python3
"""Writes the committed test fixtures under tests/data/.

verification/ gold and predicted tagged sentences plus a verification CSV
              whose MUC tallies are fixed by construction.
triage/       5,794 target/generated pairs with a known mix of identical,
              critical and formatting-only generations.
similarity/   random string pairs with ratios from difflib (autojunk off).
"""

import csv
import difflib
import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "tests" / "data"

LABELS = ["COMPANY", "LUCRO", "MONEY", "PERCENTUAL", "QUARTER", "YEAR", "RECEITA", "DESPESA", "RISCO"]
WORDS = ["o", "a", "de", "do", "no", "em", "que", "com", "para", "uma", "foi", "nosso", "banco", "ano",
         "crescimento", "resultado", "trimestre", "estável", "queda", "alta", "período", "mercado"]


def write_jsonl(path, records):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


# -- MUC verification table -------------------------------------------------------------------

def verification(rng):
    cor_target = 30058
    events = ["INC"] * 9 + ["MIS"] * 48 + ["SPU"] * 95
    rng.shuffle(events)
    gold_all, pred_all, rows = [], [], []
    cor = 0
    n = 0
    while cor < cor_target or events:
        sid = f"t8-{n:05d}"
        tokens, gold, pred = [], [], []
        # One error event per sentence while events remain.
        event = events.pop() if events else None
        budget = min(rng.randint(6, 14), cor_target - cor)
        while budget > 0:
            tokens.append(rng.choice(WORDS))
            gold.append("O")
            pred.append("O")
            label = rng.choice(LABELS)
            width = min(budget, rng.randint(1, 3))
            for i in range(width):
                tokens.append(f"ent{rng.randint(0, 999)}")
                tag = ("B-" if i == 0 else "I-") + label
                gold.append(tag)
                pred.append(tag)
            budget -= width
            cor += width
        tokens.append(rng.choice(WORDS))
        gold.append("O")
        pred.append("O")
        if event is not None:
            idx = len(tokens)
            tokens.append(f"err{n}")
            label = rng.choice(LABELS)
            other = rng.choice([x for x in LABELS if x != label])
            if event == "INC":
                gold.append("B-" + label)
                pred.append("B-" + other)
            elif event == "MIS":
                gold.append("B-" + label)
                pred.append("O")
            else:
                gold.append("O")
                pred.append("B-" + label)
            tokens.append(rng.choice(WORDS))
            gold.append("O")
            pred.append("O")
            rows.append([sid, idx, event])
        gold_all.append({"id": sid, "tokens": tokens, "tags": gold})
        pred_all.append({"id": sid, "tokens": tokens, "tags": pred})
        n += 1
    assert cor == cor_target

    yes = {"MIS": 2, "INC": 0, "SPU": 83}
    rng.shuffle(rows)
    out_rows = []
    for sid, idx, cat in rows:
        verdict = "no"
        if yes[cat] > 0:
            yes[cat] -= 1
            verdict = "yes"
        out_rows.append([sid, idx, cat, verdict])
    out_rows.sort(key=lambda r: (r[0], r[1]))

    d = OUT / "verification"
    write_jsonl(d / "gold.jsonl", gold_all)
    write_jsonl(d / "pred.jsonl", pred_all)
    with open(d / "overrides.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["sentence_id", "token_index", "category", "verdict"])
        w.writerows(out_rows)
    with open(d / "expected.csv", "w", newline="") as f:
        f.write("Metric,Correct?,BERTimbau\nCOR,,30058\nMIS,No,46\n,Yes,2\nINC,No,9\n,Yes,0\nSPU,No,12\n,Yes,83\n")


# -- triage ------------------------------------------------------------------------

PHRASES = {
    "LUCRO": ["lucro líquido", "lucro recorrente"],
    "COMPANY": ["Santander", "Itaú", "Bradesco"],
    "RECEITA": ["margem financeira", "receita de serviços"],
    "ORG": ["Receita Federal", "Banco Central"],
    "QUARTER": ["2T22", "primeiro trimestre"],
}
FILLER = ["o", "a", "de", "do", "no", "com", "que", "foi", "ficou", "em", "nosso", "período", "resultado",
          "crescimento", "queda", "trimestre", "mercado", "segmento", "clientes", "operação"]


def entity(label, surface):
    return f"[{surface.replace(' ', '_')}|{label}]"


def random_target(rng):
    parts = []
    for _ in range(rng.randint(8, 20)):
        r = rng.random()
        if r < 0.10:
            parts.append(entity("MONEY", f"R$ {rng.randint(1, 999)},{rng.randint(0, 99):02d} milhões"))
        elif r < 0.18:
            parts.append(entity("PERCENTUAL", f"{rng.randint(0, 40)},{rng.randint(0, 9)}%"))
        elif r < 0.26:
            label = rng.choice(sorted(PHRASES))
            parts.append(entity(label, rng.choice(PHRASES[label])))
        else:
            parts.append(rng.choice(FILLER))
    return " ".join(parts) + " ."


def alter_number(rng, target):
    tokens = target.split(" ")
    idx = [i for i, t in enumerate(tokens) if "|MONEY]" in t or "|PERCENTUAL]" in t]
    if not idx:
        return None
    i = rng.choice(idx)
    t = tokens[i]
    digits = [j for j, c in enumerate(t) if c.isdigit()]
    j = rng.choice(digits)
    new = str((int(t[j]) + rng.randint(1, 9)) % 10)
    tokens[i] = t[:j] + new + t[j + 1:]
    return " ".join(tokens)


def change_word(rng, target):
    tokens = target.split(" ")
    idx = [i for i, t in enumerate(tokens) if t in FILLER]
    if not idx:
        return None
    i = rng.choice(idx)
    tokens[i] = rng.choice([w for w in ["fixa", "variável", "caixa", "despesa", "banco"] if w != tokens[i]])
    return " ".join(tokens)


def repeat_segment(rng, target):
    tokens = target.split(" ")[:-1]
    n = rng.randint(4, min(6, len(tokens)))
    seg = tokens[-n:]
    if any(c.isdigit() for t in seg for c in t):
        return None
    return " ".join(tokens + seg * rng.randint(1, 7)) + " ."


def formatting_only(rng, target):
    choice = rng.randint(0, 2)
    if choice == 0:
        return target[:-2]  # drops the final period
    if choice == 1:
        tokens = target.split(" ")
        idx = [i for i, t in enumerate(tokens) if t in FILLER]
        i = rng.choice(idx) if idx else 0
        tokens[i] = tokens[i].capitalize() if tokens[i].islower() else tokens[i].lower()
        return " ".join(tokens)
    return target[:-2] + "."


def triage(rng):
    total, critical, non_critical = 5794, 299, 46
    examples = [
        ("ptt5-ex-1", "o custo foi de [R$_824,00|MONEY] por cliente .", "o custo foi de [R$_8924,00|MONEY] por cliente .",
         ["numeric-alteration"]),
        ("ptt5-ex-2", "a decisão da [Receita_Federal|ORG] foi favorável .", "a decisão da [receita_fixa|ORG] foi favorável .",
         ["word-change"]),
        ("ptt5-ex-3", "os prejuízo foram [0,08%|PERCENTUAL] no período .", "os prejuízo foram [0,88%|PERCENTUAL] no período .",
         ["numeric-alteration"]),
    ]
    seg = "[R$_10,8_bilhões|MONEY] para acho que está em torno de [R$_9,8|MONEY]"
    bad = "[R$_8,8_bilhões|MONEY] para acho que está em torno de [R$_9,8|MONEY]"
    examples.append(("ptt5-ex-4", "a gente saiu de " + seg, "a gente saiu de " + " ".join([bad] * 8),
                     ["numeric-alteration", "repetition"]))

    records = []
    expected = []
    for sid, target, generated, reasons in examples:
        records.append({"id": sid, "target": target, "generated": generated})
        expected.append({"id": sid, "severity": "critical", "reasons": reasons})

    makers = [("numeric-alteration", alter_number), ("word-change", change_word), ("repetition", repeat_segment)]
    n = 0
    while len(expected) < critical:
        target = random_target(rng)
        reason, fn = makers[n % 3]
        generated = fn(rng, target)
        if generated is None or generated == target:
            continue
        sid = f"ptt5-{len(records):04d}"
        records.append({"id": sid, "target": target, "generated": generated})
        expected.append({"id": sid, "severity": "critical", "reasons": [reason]})
        n += 1
    made = 0
    while made < non_critical:
        target = random_target(rng)
        generated = formatting_only(rng, target)
        if generated == target:
            continue
        sid = f"ptt5-{len(records):04d}"
        records.append({"id": sid, "target": target, "generated": generated})
        expected.append({"id": sid, "severity": "non-critical", "reasons": ["formatting-only"]})
        made += 1
    while len(records) < total:
        target = random_target(rng)
        records.append({"id": f"ptt5-{len(records):04d}", "target": target, "generated": target})
    order = list(range(len(records)))
    rng.shuffle(order)
    records = [records[i] for i in order]

    d = OUT / "triage"
    write_jsonl(d / "ptt5_pairs.jsonl", records)
    write_jsonl(d / "ptt5_expected.jsonl", expected)


# -- similarity ------------------------------------------------------------------

def similarity(rng):
    alphabets = ["ab", "abc", "abcdé", "lucro líquido", "0123456789,%R$ ", "açãoéíôü xyz"]
    records = []
    for i in range(1000):
        alpha = rng.choice(alphabets)
        a = "".join(rng.choice(alpha) for _ in range(rng.randint(0, 40)))
        if rng.random() < 0.5:
            b = list(a)
            for _ in range(rng.randint(0, 6)):
                op = rng.randint(0, 2)
                pos = rng.randint(0, len(b))
                if op == 0:
                    b.insert(pos, rng.choice(alpha))
                elif b and pos < len(b):
                    if op == 1:
                        del b[pos]
                    else:
                        b[pos] = rng.choice(alpha)
            b = "".join(b)
        else:
            b = "".join(rng.choice(alpha) for _ in range(rng.randint(0, 40)))
        m = difflib.SequenceMatcher(None, a, b, autojunk=False)
        matched = sum(blk.size for blk in m.get_matching_blocks())
        records.append({"a": a, "b": b, "matched": matched, "ratio": m.ratio()})
    write_jsonl(OUT / "similarity" / "difflib_pairs.jsonl", records)


def main():
    verification(random.Random(8))
    triage(random.Random(5794))
    similarity(random.Random(1000))


if __name__ == "__main__":
    main()
