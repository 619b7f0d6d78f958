"""Plot the trajectories written by `swarmtsc opening` (one panel per tactic)."""

import sys

import matplotlib.pyplot as plt
import pandas as pd


def main(path: str = "opening.csv", out: str = "opening.png") -> None:
    rows = pd.read_csv(path)
    tactics = list(dict.fromkeys(rows["tactic"]))
    fig, axes = plt.subplots(1, len(tactics), figsize=(4 * len(tactics), 4), sharex=True, sharey=True)
    for ax, tactic in zip(axes, tactics):
        sub = rows[rows["tactic"] == tactic]
        for (role, agent), track in sub.groupby(["role", "agent"]):
            colour = "tab:red" if role == "attacker" else "tab:blue"
            ax.plot(track["x"], track["y"], color=colour, lw=0.8)
            ax.plot(track["x"].iloc[0], track["y"].iloc[0], "o", color=colour, ms=3)
        ax.set_title(tactic)
        ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(out, dpi=150)


if __name__ == "__main__":
    main(*sys.argv[1:])
