"""
A tour of random games
======================

The test corpus mixes unstructured random recursive games with games that
carry a planted cycle. This script runs a few of each through the pipeline
and tallies what the structural step finds.
"""

# %%
from collections import Counter

from shiftgames.corpus import corpus, singleton_family
from shiftgames.pipeline import load, run_pipeline

docs = corpus(20, seed=1)
tally = Counter()
for k, doc in enumerate(docs):
    game, family = load(doc)
    run = run_pipeline(game, family or singleton_family(game), stop="aux")
    dec = run.decomposition
    tally["planted" if family else "random"] += 1
    tally["with first family"] += bool(dec.F1)
    tally["with second family"] += bool(dec.F2)
    tally["skipped sets"] += len(dec.skipped)
    tally["certified"] += run.certificate.certified
    if k < 6:
        print(k, game.states, "F1", [sorted(c.C) for c in dec.F1], run.certificate.status)
print(dict(tally))

# %% [markdown]
# A planted game all the way through: assemble the strategy pair and check it
# exactly against best responses. In game 69 a pure exit would tempt the other
# player into an off-path absorbing reply, so the exit is taken slowly instead.

# %%
from shiftgames.corpus import corpus_document

game, family = load(corpus_document(69, seed=1))
run = run_pipeline(game, family)
print(run.report.verdict, [round(g, 4) for g in run.report.gaps])
plan = run.strategies[0].plan
print("exit intensities:", sorted({str(r.intensity) for r in plan.routines.values()}))
