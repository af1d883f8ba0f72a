"""Testing a restriction by relaxing it.

The preset violates monotone take-up for member 2 on a small share of pairs.
Imposing the restriction exactly leaves no distribution consistent with the
data; allowing a violating mass of at most eps restores an interval, and once
eps exceeds the needed slack the interval stops moving.
"""
from pairbounds.data import empirical_cells
from pairbounds.program import ADE, bounds, build_program
from pairbounds.simulate import PRESETS, sample_dataset
from pairbounds.typespace import TypeSpaceConfig


def main(n=20_000, seed=2):
    obs = empirical_cells(sample_dataset(PRESETS["vb_violation"](), n, seed=seed))
    for eps in (0.0, 0.005, 0.01, 0.02, 0.1, 0.5):
        cons = [f"eps_vb_monotone:{eps}", "strategic_neutrality"]
        iv = bounds(build_program(TypeSpaceConfig(), cons, ADE(2), obs))
        shown = "empty" if iv.is_empty else f"[{iv.lower:.4f}, {iv.upper:.4f}]"
        print(f"eps = {eps:<6}: {shown}")


if __name__ == "__main__":
    main()
