#!/usr/bin/env python3
"""Generates the golden mini-corpus of earnings-call sentences.

Writes data/golden/corpus.jsonl (raw sentences with year and company
metadata), data/golden/template_entities.jsonl (the entities each template
slot inserted, as character spans) and data/golden/scores.csv.
"""

import csv
import json
import random
from pathlib import Path

SEED = 20240518
ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "data" / "golden"

COMPANIES = ["Santander", "Itaú", "Bradesco", "Banco do Brasil", "BTG Pactual", "Banrisul"]
SLOTS = {
    "LUCRO": ["lucro líquido", "lucro recorrente", "lucro gerencial"],
    "QUARTER": ["2T22", "4T21", "1T23", "primeiro trimestre", "terceiro trimestre", "3º trimestre"],
    "SEMESTER": ["primeiro semestre", "segundo semestre", "1S23", "2º semestre"],
    "YEAR": ["2019", "2020", "2021", "2022", "2023"],
    "CARTEIRA": ["carteira de crédito", "carteira ampliada", "carteira de varejo"],
    "RISCO": ["índice de inadimplência", "inadimplência", "risco de crédito"],
    "INDICADOR_RENTABILIDADE": ["ROE", "ROAE"],
    "RECEITA": ["margem financeira", "receita de serviços", "margem com clientes"],
    "DESPESA": ["despesas administrativas", "despesas de pessoal", "despesas operacionais"],
    "PROVISAO": ["PDD", "provisões", "custo do crédito"],
    "PRODUTO": ["cartões", "consignado", "crédito imobiliário", "financiamento de veículos"],
    "CONDICOES_MACROECONOMICAS": ["taxa Selic", "inflação", "IPCA"],
    "ORG": ["Banco Central", "CVM", "Receita Federal"],
    "PROVENTO": ["dividendos", "juros sobre capital próprio", "JCP"],
    "INDICADOR_LIQUIDEZ": ["índice de Basileia", "capital principal"],
    "INDICADOR_EFICIENCIA": ["índice de eficiência"],
    "CLIENTE": ["clientes", "correntistas"],
    "BALANCO_PATRIMONIAL": ["patrimônio líquido", "ativo total"],
    "RESULTADO": ["resultado operacional", "resultado de tesouraria"],
    "INDICADOR_VALUATION": ["valor de mercado"],
}

TEMPLATES = [
    "O {LUCRO} do {COMPANY} atingiu {MONEY} no {QUARTER}, alta de {PERCENTUAL} em relação a {YEAR}.",
    "A {CARTEIRA} cresceu {PERCENTUAL} no {SEMESTER}, impulsionada por {PRODUTO}.",
    "O {INDICADOR_RENTABILIDADE} ficou em {PERCENTUAL} no {QUARTER}, acima do nosso custo de capital.",
    "Nosso {INDICADOR_EFICIENCIA} melhorou para {PERCENTUAL} ao longo de {YEAR}.",
    "As {DESPESA} somaram {MONEY} no trimestre, praticamente estáveis.",
    "O {RISCO} acima de noventa dias ficou estável em {PERCENTUAL} no {QUARTER}.",
    "A {RECEITA} totalizou {MONEY} no {QUARTER}, com crescimento de {PERCENTUAL}.",
    "Com a {CONDICOES_MACROECONOMICAS} em patamar elevado, esperamos uma redução do {PROVISAO} no {SEMESTER}.",
    "O {ORG} manteve a {CONDICOES_MACROECONOMICAS} em {PERCENTUAL} durante o {QUARTER}.",
    "Vamos distribuir {MONEY} em {PROVENTO} referentes ao exercício de {YEAR}.",
    "O {INDICADOR_LIQUIDEZ} encerrou o {QUARTER} em {PERCENTUAL}, bem acima do mínimo regulatório.",
    "Hoje temos uma base muito engajada de {CLIENTE} usando o aplicativo todos os dias.",
    "O {BALANCO_PATRIMONIAL} chegou a {MONEY} ao final de {YEAR}.",
    "O {RESULTADO} apresentou crescimento de {PERCENTUAL} no {SEMESTER} de {YEAR}.",
    "O {COMPANY} encerrou {YEAR} com {VALUATION_PHRASE}.",
    "Os números do {COMPANY} mostram que a estratégia de {PRODUTO} segue gerando valor.",
]

FILLERS = [
    "Bom dia a todos e obrigado por participarem da nossa teleconferência de resultados.",
    "Vamos agora abrir para a sessão de perguntas e respostas.",
    "Passo agora para o próximo slide da apresentação.",
    "Acreditamos que estamos bem posicionados para os próximos trimestres.",
    "Seguimos confiantes na execução da nossa estratégia de longo prazo.",
    "Queria agradecer a pergunta e complementar o que foi dito anteriormente.",
]
SHORT = ["Obrigado.", "Bom dia a todos.", "Próxima pergunta, por favor.", "Muito obrigado pela pergunta."]


def money(rng):
    whole = rng.randint(1, 99)
    frac = rng.randint(0, 9)
    scale = rng.choice(["bilhões", "milhões"])
    if rng.random() < 0.8:
        return f"R$ {whole},{frac} {scale}"
    return f"{whole},{frac} {scale} de reais"


def percent(rng):
    return f"{rng.randint(0, 30)},{rng.randint(0, 9)}%"


def fill(template, rng, company):
    """Returns the sentence text and its (start, end, label) entities."""
    text = ""
    entities = []
    rest = template
    while "{" in rest:
        before, _, after = rest.partition("{")
        slot, _, rest = after.partition("}")
        text += before
        if slot == "COMPANY":
            value, label = company, "COMPANY"
        elif slot == "MONEY":
            value, label = money(rng), "MONEY"
        elif slot == "PERCENTUAL":
            value, label = percent(rng), "PERCENTUAL"
        elif slot == "VALUATION_PHRASE":
            text += "um "
            value, label = rng.choice(SLOTS["INDICADOR_VALUATION"]), "INDICADOR_VALUATION"
            entities.append((len(text), len(text) + len(value), label))
            text += value
            text += " de "
            value, label = money(rng), "MONEY"
        else:
            value, label = rng.choice(SLOTS[slot]), slot
        if not text or text.endswith(". "):
            value = value[0].upper() + value[1:]
        entities.append((len(text), len(text) + len(value), label))
        text += value
    text += rest
    return text, entities


def char_spans(text, entities):
    """Byte offsets, matching the toolkit's span convention."""
    out = []
    for start, end, label in entities:
        b_start = len(text[:start].encode("utf-8"))
        b_end = len(text[:end].encode("utf-8"))
        out.append({"start": b_start, "end": b_end, "surface": text[start:end], "label": label})
    return out


def main():
    rng = random.Random(SEED)
    OUT.mkdir(parents=True, exist_ok=True)
    rows = []
    truth = []
    for i in range(200):
        year = str(rng.choice([2019, 2020, 2021, 2022, 2023]))
        company = rng.choice(COMPANIES)
        roll = rng.random()
        if roll < 0.06:
            text, entities = rng.choice(SHORT), []
        elif roll < 0.20:
            text, entities = rng.choice(FILLERS), []
        else:
            text, entities = fill(rng.choice(TEMPLATES), rng, company)
        sid = f"golden-{i:03d}"
        rows.append({"id": sid, "text": text, "year": year, "company": company})
        truth.append({"id": sid, "entities": char_spans(text, entities)})

    with open(OUT / "corpus.jsonl", "w", encoding="utf-8") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")
    with open(OUT / "template_entities.jsonl", "w", encoding="utf-8") as f:
        for r in truth:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")

    models = ["BERTimbau", "mBERT", "PTT5", "mT5"]
    base = [0.9899, 0.9880, 0.9842, 0.9833]
    with open(OUT / "scores.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["subset"] + models)
        for s in range(5):
            w.writerow([f"fold-{s + 1}"] + [f"{b - 0.0007 * s + rng.uniform(-0.0002, 0.0002):.4f}" for b in base])


if __name__ == "__main__":
    main()
