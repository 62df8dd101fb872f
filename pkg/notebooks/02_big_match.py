"""
The Big Match: vanishing discounts and stationary punishment
============================================================

Player 1 plays T to stop the game: she wins if player 2 played L and loses
otherwise. Before that, each stage pays her 1 when the actions mismatch.
Average payoffs have value 1/2 but no stationary optimal strategy for player 1.
"""

# %%
import numpy as np

from shiftgames.fixtures import g_bm
from shiftgames.equilibrium import punishment_strategy
from shiftgames.values import discounted_value, maxmin_values, vanishing_discount

game = g_bm()

# %% [markdown]
# Discounted values stay at 1/2 along the grid, while player 1's optimal
# weight on T shrinks with the discount weight, like lambda / (1 + lambda).

# %%
grid = tuple(2.0 ** -k for k in range(1, 11))
for lam in grid[::3]:
    vec, (x1, _) = discounted_value(game, 0, lam)
    print(f"lambda={lam:.4f} value={vec.array()[0]:.6f} P(T)={float(x1[0][0]):.6f} vs {lam / (1 + lam):.6f}")

series, extrap, delta = vanishing_discount(game, 0, grid)
print("extrapolated value", float(extrap[-1][0]), "last change", delta)

# %% [markdown]
# The limit value is a guarantee only for history-dependent play.
# A stationary punisher can hold player 1 down exactly, but player 2
# escapes stationary punishment: against any fixed weight on T she finds a
# reply worth 1, half a unit above her value.

# %%
for punished in (0, 1):
    pun = punishment_strategy(game, punished, 1e-3, maxmin_values(game, punished))
    table = [float(w) for w in pun.strategy.table[0]]
    print(f"punishing player {punished + 1}: mix {np.round(table, 4)} excess {pun.excess:.4f}")
