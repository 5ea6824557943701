#!/usr/bin/env python3
"""Population click-trend experiment.

Simulates agent populations for one model variant in all four conditions,
writes mean-click curves and Mann-Kendall trend tests, and prints a compact
summary resembling the behavioral analysis (trend per condition plus the
between-condition ordering).

Usage:
  python scripts/trend_simulation.py --variant rf_pr --agents 50 --seed 0
"""

import argparse
from pathlib import Path

import numpy as np

from metaplan import env
from metaplan.cli import simulate_condition_clicks
from metaplan.data_io import atomic_write_json, write_csv
from metaplan.models.variants import VARIANTS, default_sim_params
from metaplan.stats import kruskal_wallis, mann_kendall, mean_click_curve


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--variant", default="rf_pr", choices=sorted(VARIANTS))
    parser.add_argument("--agents", type=int, default=50)
    parser.add_argument("--trials", type=int, default=35)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-dir", type=Path, default=Path("out/trends"))
    args = parser.parse_args()

    topology = env.default_topology()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    summary = {"variant": args.variant, "agents": args.agents, "conditions": {}}
    per_agent_means = {}
    for condition in env.condition_presets():
        params = default_sim_params(args.variant, condition.label)
        clicks = simulate_condition_clicks(
            args.variant, params, condition, topology, args.agents, args.trials, args.seed
        )
        per_agent_means[condition.label] = clicks.mean(axis=1)
        curve = mean_click_curve(clicks)
        write_csv(
            args.out_dir / f"curve_{args.variant}_{condition.label}.csv",
            ["trial", "mean_clicks", "sem"],
            curve,
        )
        trend = mann_kendall([m for _, m, _ in curve])
        summary["conditions"][condition.label] = {
            "params": params,
            "mean_clicks": float(clicks.mean()),
            "mann_kendall_S": trend.S,
            "mann_kendall_p": trend.p_two_sided,
        }
        direction = "increasing" if trend.S > 0 else "decreasing"
        print(
            f"{condition.label}: mean clicks {clicks.mean():5.2f}, "
            f"{direction} trend S={trend.S:+d} (p={trend.p_two_sided:.2g})"
        )

    h, p = kruskal_wallis(list(per_agent_means.values()))
    summary["kruskal_wallis"] = {"H": h, "p": p}
    print(f"between-condition Kruskal-Wallis: H={h:.2f}, p={p:.2g}")
    atomic_write_json(args.out_dir / f"summary_{args.variant}.json", summary)
    print(f"wrote {args.out_dir}")


if __name__ == "__main__":
    main()
