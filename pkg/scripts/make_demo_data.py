#!/usr/bin/env python3
"""Generate a demo cohort of synthetic participants.

Writes session files (one per simulated participant, spread over the four
conditions) that the fit / select / analyze commands consume, so the whole
pipeline can be exercised without running the live experiment.

Usage:
  python scripts/make_demo_data.py --per-condition 3 --out-dir out/demo_sessions
"""

import argparse
from pathlib import Path

from metaplan import env
from metaplan.data_io import save_session
from metaplan.fitting import generate_synthetic_participant
from metaplan.models.variants import VARIANTS, default_sim_params


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--variant", default="rf_pr", choices=sorted(VARIANTS))
    parser.add_argument("--per-condition", type=int, default=3)
    parser.add_argument("--trials", type=int, default=35)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-dir", type=Path, default=Path("out/demo_sessions"))
    args = parser.parse_args()

    args.out_dir.mkdir(parents=True, exist_ok=True)
    count = 0
    for condition in env.condition_presets():
        params = default_sim_params(args.variant, condition.label)
        for i in range(args.per_condition):
            pid = f"{condition.label.lower()}_{i:02d}"
            data = generate_synthetic_participant(
                args.variant, params, condition.label,
                n_trials=args.trials,
                seed=args.seed * 1000 + count,
                participant_id=pid,
            )
            save_session(args.out_dir / f"{pid}.json", data)
            count += 1
    print(f"wrote {count} session files to {args.out_dir}")


if __name__ == "__main__":
    main()
