"""
From a game file to a verified equilibrium
==========================================

Two states swap back and forth forever unless player 1 plays ``a`` while
player 2 plays ``L`` in state 1; that pair ends the game with payoffs
(-1, 2). A run that never ends pays (-2, 1). We go through every stage of the
pipeline by hand and then try to cheat against the result.
"""

# %%
from shiftgames.automaton import stationary
from shiftgames.fixtures import g_loop_document
from shiftgames.game import pure
from shiftgames.pipeline import load, run_pipeline
from shiftgames.simulate import on_path_values, simulate

game, family = load(g_loop_document())
print("states:", game.states)
print("actions:", game.actions)

# %% [markdown]
# Maxmin values. Player 1 cannot force the exit (player 2 can always answer
# ``R``), so she is held to the non-absorbing payoff -2. Player 2 can
# guarantee 1 by refusing, and nothing more.

# %%
run = run_pipeline(game, family)
for i, vec in enumerate(run.values):
    print(f"player {i + 1}:", [str(v) for v in vec.values], "exact" if vec.exact else "")

# %% [markdown]
# The two non-absorbing states form a communicating set. The exit
# (a, L) pays both players at least as much as staying, so the set is
# controlled and goes into the first family.

# %%
dec = run.decomposition.to_json(game)
print("first family:", dec["F1"])
print("second family:", dec["F2"])

# %% [markdown]
# The auxiliary game replaces the set by its exit law. Its certified
# stationary profile absorbs with probability one.

# %%
cert = run.certificate
print("status:", cert.status, "gaps:", cert.gaps)
print("auxiliary payoffs:", [[float(p) for p in row] for row in cert.payoffs])

# %% [markdown]
# Assembling the global strategy pair and verifying it exactly: both
# best-response gaps come out below epsilon.

# %%
report = run.report
print(report.verdict, "gaps", report.gaps, "on path", report.on_path[0])

stats = simulate(game, *run.strategies, start=0, horizon=100, n_runs=500, seed=1)
print("simulated mean payoff", stats.mean_payoff, "+/-", stats.half_width)

# %% [markdown]
# What if player 2 never plays ``L``? The game never ends and player 2 is
# left with her maxmin value of 1 instead of 2.

# %%
refuse = stationary(game, 1, [pure(1, 2)] * game.n_states)
print("refusing player 2 gets", on_path_values(game, run.strategies[0], refuse, starts=[0])[0][1])
