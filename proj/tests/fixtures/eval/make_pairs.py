#!/usr/bin/env python3
"""Builds pairs.json: 200 labeled (prediction, answers, expected) triples."""
import json
import random

pairs = []


def add(prediction, answers, expected):
    pairs.append({"prediction": prediction, "answers": answers, "expected": expected})


# Hand-picked edge cases.
add("The answer is Paris.", ["paris"], True)
add("PARIS", ["Paris"], True)
add("  paris  ", ["paris"], True)
add("par is", ["paris"], False)
add("The answer is 42.", ["42"], True)
add("The answer is 42.", ["43"], False)
add("1234", ["23"], True)
add("", ["anything"], False)
add("   ", ["x"], False)
add("something", [""], False)
add("something", ["  ,. "], False)
add("yes", ["no", "yes"], True)
add("maybe", ["no", "yes"], False)
add("It’s blue", ["it's blue"], True)
add("“quoted”", ["\"quoted\""], True)
add("well–known fact", ["well-known"], True)
add("well—known", ["well-known"], True)
add("wait… what", ["wait..."], True)
add("ﬁnal answer", ["final"], True)
add("４２", ["42"], True)
add("ＨＥＬＬＯ", ["hello"], True)
add("CAFÉ", ["café"], True)
add("naïve", ["NAÏVE"], True)
add("A×B", ["a×b"], True)
add("275,000", ["275,000"], True)
add("totals 275,000 units", ["275,000"], True)
add("totals 275.000 units", ["275,000"], False)
add("(yes)", ["yes"], True)
add("[42]", ["42"], True)
add("answer: blue;", ["blue"], True)
add("co-op", ["coop"], False)
add("co-op", ["co-op"], True)
add("don't", ["dont"], False)
add("don't", ["don't"], True)
add("don’t", ["don't"], True)
add("multiple   spaces", ["multiple spaces"], True)
add("tab\tseparated", ["tab separated"], True)
add("new\nline", ["new line"], True)
add("NBSP joined", ["nbsp joined"], True)
add("ideographic　space", ["ideographic space"], True)
add("thin space", ["thin space"], True)
add("zero​width", ["zero width"], True)
add("range 3–5 is fine", ["3-5"], True)
add("so-called ‘quote’", ["'quote'"], True)
add("The trademark™ sign", ["trademark™"], True)
add("ANSWER IS KMITTLE@DWRITE.COM.", ["kmittle@dwrite.com"], True)
add(
    "According to the image, question and guidance, there are four conferences "
    "were held in the fall of 1968.",
    ["four"],
    True,
)
add("The answer is 275,000.", ["275,000"], True)
add("£5.00", ["£5.00"], True)
add("it costs $5.", ["$5"], True)
add("100%", ["100%"], True)
add("100%", ["100"], True)
add("no", ["No."], True)
add("nope", ["no"], True)
add("answer unknown", ["known"], True)
add("ﬂour", ["flour"], True)
add("straße", ["STRASSE"], False)
add("Ümlaut", ["ümlaut"], True)
add("†dagger†", ["dagger"], True)
add("The answer is unknown.", ["paris", "london"], False)

assert len(pairs) == 60, len(pairs)

# Generated cases: 70 positives embedding the answer, 70 negatives with a
# disjoint alphabet so no accidental substring can appear.
rng = random.Random(20240817)

answers_pos = [
    "zebra", "quartz", "jigsaw", "kayak", "blitz", "sphinx", "vortex", "fjord",
    "glyph", "nymph", "9137", "8842", "17,500", "oxford street", "12 kg",
    "blue whale", "mk-iv", "7:30", "stage 4", "delta wing",
]
pos_templates = [
    "The answer is {}.",
    "It is {}",
    "{}",
    "I think it's {}!",
    "Answer: {}",
    "“{}” is shown",
    "the value {} appears near the header",
    "Based on the image, the answer should be {}.",
    "According to the document, {} is correct.",
    "it reads ({})",
]
for i in range(70):
    ans = answers_pos[i % len(answers_pos)]
    tpl = pos_templates[i % len(pos_templates)]
    pred = tpl.format(ans.upper() if i % 3 == 0 else ans)
    add(pred, [ans], True)

neg_words = [
    "the", "report", "shows", "a", "total", "of", "several", "items", "found",
    "on", "page", "one", "image", "contains", "text", "about", "annual",
    "revenue", "growth", "chart", "table", "column", "row", "header", "value",
    "amount", "date", "name", "title", "section",
]
neg_answers = [
    "zebra", "quartz", "jigsaw", "kayak", "blitz", "sphinx", "vortex", "fjord",
    "glyph", "nymph", "9137", "88,42", "zippy", "quizzical",
]
for i in range(70):
    n = 4 + rng.randrange(6)
    pred = " ".join(rng.choice(neg_words) for _ in range(n))
    ans = neg_answers[i % len(neg_answers)]
    add(pred.capitalize() + ".", [ans], False)

assert len(pairs) == 200, len(pairs)

with open("pairs.json", "w", encoding="utf-8") as f:
    json.dump({"pairs": pairs}, f, ensure_ascii=False, indent=1)
    f.write("\n")
print(f"wrote {len(pairs)} pairs")
