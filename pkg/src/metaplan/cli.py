"""Command-line surface tying the pipeline together.

Subcommands: simulate (agent population curves per condition), fit
(pseudo-likelihood fits per participant x variant), select (BIC tables and
Bayesian model selection), analyze (trend tests, adaptiveness labels,
group comparisons), serve (the live experiment HTTP service), and validate
(session-file checks).

All outputs are deterministic given --seed. Exit codes: 2 configuration
error, 3 data error, 4 runtime failure.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import env
from .data_io import (
    ConfigError,
    DataError,
    ParticipantData,
    RunConfig,
    atomic_write_json,
    default_out_dir,
    load_config,
    load_sessions,
    validate_session,
    write_csv,
)
from .env import condition_presets, get_condition
from .features import catalog_to_csv_rows
from .fitting import FitResult, fit_participant
from .models.variants import (
    FAMILY_PARTITIONS,
    VARIANT_ORDER,
    VARIANTS,
    default_sim_params,
    parse_variant,
    run_session,
)
from .selection import BmsResult, bic, count_best, family_bms, rfx_bms
from .stats import (
    classify_adaptiveness,
    compare_group_parameters,
    kruskal_wallis,
    mann_kendall,
    mean_click_curve,
    wilcoxon_ranksum,
)

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4


def common_options(fn):
    @click.option("--seed", type=int, default=None, help="Master random seed.")
    @click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None, help="JSON run configuration supplying defaults.")
    @click.option("--out-dir", type=click.Path(file_okay=False), default=None, help="Output directory (default $METAPLAN_OUT_DIR or ./out).")
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, click.UsageError) as exc:
            click.echo(f"configuration error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except DataError as exc:
            click.echo(f"data error: {exc}", err=True)
            sys.exit(EXIT_DATA)
        except Exception as exc:  # noqa: BLE001 - mapped to the runtime exit code
            click.echo(f"runtime failure: {exc}", err=True)
            sys.exit(EXIT_RUNTIME)

    return wrapper


def _resolve(config_path: str | None, seed: int | None, out_dir: str | None) -> RunConfig:
    cfg = load_config(config_path) if config_path else RunConfig()
    if seed is not None:
        cfg.seed = seed
    if out_dir is not None:
        cfg.out_dir = out_dir
    if cfg.out_dir is None:
        cfg.out_dir = str(default_out_dir())
    Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
    return cfg


@click.group()
def main() -> None:
    """Metacognitive-learning pipeline for click-to-reveal planning tasks."""


@main.command()
@click.option("--variant", default="rf_pr", type=click.Choice(sorted(VARIANTS)), help="Model variant to simulate.")
@click.option("--condition", default="all", help="Condition label or 'all'.")
@click.option("--agents", type=int, default=None, help="Simulated agents per condition.")
@click.option("--trials", type=int, default=None, help="Trials per agent.")
@click.option("--params", "params_json", default=None, help="JSON object overriding the variant's default parameters.")
@common_options
def simulate(variant, condition, agents, trials, params_json, seed, config_path, out_dir):
    """Simulate agent populations and emit mean-click curves per condition."""
    cfg = _resolve(config_path, seed, out_dir)
    agents = agents if agents is not None else cfg.agents
    trials = trials if trials is not None else cfg.trials

    def resolve_params(condition_label: str) -> dict:
        params = default_sim_params(variant, condition_label)
        params.update(cfg.params)
        if params_json:
            try:
                params.update(json.loads(params_json))
            except json.JSONDecodeError as exc:
                raise ConfigError(f"--params is not valid JSON: {exc}") from exc
        return params

    if condition == "all":
        conditions = condition_presets()
    else:
        try:
            conditions = [get_condition(condition)]
        except KeyError as exc:
            raise ConfigError(str(exc)) from exc

    topology = cfg.topology()
    out = Path(cfg.out_dir)
    summary: dict[str, dict] = {"variant": variant, "conditions": {}}
    for cond in conditions:
        params = resolve_params(cond.label)
        clicks = simulate_condition_clicks(
            variant, params, cond, topology, agents, trials, cfg.seed
        )
        curve = mean_click_curve(clicks)
        write_csv(
            out / f"simulate_curve_{variant}_{cond.label}.csv",
            ["trial", "mean_clicks", "sem"],
            curve,
        )
        write_csv(
            out / f"simulate_clicks_{variant}_{cond.label}.csv",
            ["agent"] + [f"trial_{t}" for t in range(trials)],
            [[i] + list(row) for i, row in enumerate(clicks)],
        )
        trend = mann_kendall([m for _, m, _ in curve])
        summary["conditions"][cond.label] = {
            "params": params,
            "mean_clicks": float(clicks.mean()),
            "mann_kendall_S": trend.S,
            "mann_kendall_z": trend.z,
            "mann_kendall_p": trend.p_two_sided,
        }
        click.echo(
            f"{cond.label}: mean clicks {clicks.mean():.2f}, "
            f"S={trend.S}, p={trend.p_two_sided:.4g}"
        )
    atomic_write_json(out / f"simulate_summary_{variant}.json", summary)


def simulate_condition_clicks(
    variant: str,
    params: dict,
    condition: env.Condition,
    topology: env.TreeTopology,
    agents: int,
    trials: int,
    seed: int,
) -> np.ndarray:
    """(agents x trials) click counts; each agent gets its own seeded trials."""
    clicks = np.zeros((agents, trials), dtype=int)
    for a in range(agents):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=seed, spawn_key=(hash_label(condition.label), a))
        )
        agent_trials = [env.sample_trial(topology, condition, rng, t) for t in range(trials)]
        clicks[a] = run_session(variant, params, agent_trials, rng).click_counts
    return clicks


def hash_label(label: str) -> int:
    return sum(ord(c) * 31**i for i, c in enumerate(label)) % (2**31)


@main.command()
@click.option("--data", "data_path", required=True, type=click.Path(exists=True), help="Session file or directory of session files.")
@click.option("--variant", default="all", help="Variant id or 'all'.")
@click.option("--budget", type=int, default=None, help="Optimizer evaluations per fit.")
@click.option("--sims", type=int, default=None, help="Simulations per evaluation.")
@click.option("--optimizer", type=click.Choice(["tpe", "random"]), default="tpe")
@common_options
def fit(data_path, variant, budget, sims, optimizer, seed, config_path, out_dir):
    """Fit model variants to participants' per-trial click counts."""
    cfg = _resolve(config_path, seed, out_dir)
    budget = budget if budget is not None else cfg.budget
    sims = sims if sims is not None else cfg.sims
    if variant == "all":
        variant_ids = list(VARIANT_ORDER)
    elif variant in VARIANTS:
        variant_ids = [variant]
    else:
        raise ConfigError(f"unknown variant {variant!r}")

    sessions = load_sessions(data_path)
    out = Path(cfg.out_dir)
    for data in sessions:
        for vid in variant_ids:
            result = fit_participant(
                parse_variant(vid), data, budget_evals=budget,
                sims_per_eval=sims, seed=cfg.seed, optimizer=optimizer,
            )
            path = out / f"fit_{data.participant_id}_{vid}.json"
            result.save(path)
            click.echo(
                f"{data.participant_id} {vid}: logL={result.log_pseudo_likelihood:.3f} "
                f"sigma={result.sigma:.3f} -> {path}"
            )


def _load_fits(fits_dir: Path) -> list[FitResult]:
    files = sorted(Path(fits_dir).glob("fit_*.json"))
    if not files:
        raise DataError(f"no fit results in {fits_dir}")
    return [FitResult.from_json(json.loads(f.read_text())) for f in files]


def _bms_table_rows(results: dict[str, BmsResult], labels: tuple[str, ...]):
    """Rows = labels, columns = r/phi per analysis key ('overall' first)."""
    keys = ["overall"] + sorted(k for k in results if k != "overall")
    header = ["model"]
    for key in keys:
        header += [f"{key}_r", f"{key}_phi"]
    rows = []
    for i, label in enumerate(labels):
        row: list = [label]
        for key in keys:
            res = results[key]
            row += [float(res.expected_frequencies[i]), float(res.exceedance[i])]
        rows.append(row)
    return header, rows


@main.command()
@click.option("--fits", "fits_dir", required=True, type=click.Path(exists=True, file_okay=False), help="Directory of fit result JSON files.")
@click.option("--mc-samples", type=int, default=1_000_000, help="Dirichlet samples for exceedance probabilities.")
@click.option("--param-counts", "param_counts_json", default=None, help="JSON object overriding per-variant parameter counts entering BIC (sigma included).")
@common_options
def select(fits_dir, mc_samples, param_counts_json, seed, config_path, out_dir):
    """BIC tables, best-model counts, and Bayesian model selection."""
    cfg = _resolve(config_path, seed, out_dir)
    fits = _load_fits(Path(fits_dir))
    param_counts = {v: VARIANTS[v].n_free_params + 1 for v in VARIANTS}  # + sigma
    if param_counts_json:
        try:
            param_counts.update(json.loads(param_counts_json))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--param-counts is not valid JSON: {exc}") from exc

    by_participant: dict[str, dict[str, FitResult]] = {}
    for f in fits:
        by_participant.setdefault(f.participant_id, {})[f.variant] = f
    participant_ids = sorted(by_participant)
    fitted = set.intersection(*(set(v) for v in by_participant.values()))
    variant_ids = tuple(v for v in VARIANT_ORDER if v in fitted)
    if len(variant_ids) < 2:
        raise DataError(
            "need at least 2 variants fitted for every participant; "
            f"common set: {sorted(fitted)}"
        )

    conditions = tuple(
        next(iter(by_participant[p].values())).condition for p in participant_ids
    )
    bic_matrix = np.array(
        [
            [
                bic(
                    by_participant[p][v].log_pseudo_likelihood,
                    param_counts[v],
                    by_participant[p][v].n_trials,
                )
                for v in variant_ids
            ]
            for p in participant_ids
        ]
    )

    out = Path(cfg.out_dir)
    write_csv(
        out / "bic_table.csv",
        ["participant_id", "condition", *variant_ids],
        [
            [p, conditions[i], *bic_matrix[i]]
            for i, p in enumerate(participant_ids)
        ],
    )

    counts = count_best(bic_matrix, variant_ids, conditions)
    count_keys = ["overall"] + sorted(k for k in counts if k != "overall")
    write_csv(
        out / "best_counts.csv",
        ["variant", *count_keys],
        [[v, *(counts[k][v] for k in count_keys)] for v in variant_ids],
    )

    log_ev = -bic_matrix / 2.0
    present_conditions = sorted(set(conditions))

    def bms_by_condition(run) -> dict[str, BmsResult]:
        results = {"overall": run(log_ev)}
        for c in present_conditions:
            mask = np.array([cond == c for cond in conditions])
            if mask.sum() >= 1:
                results[c] = run(log_ev[mask])
        return results

    variant_bms = bms_by_condition(
        lambda ev: rfx_bms(ev, mc_samples=mc_samples, seed=cfg.seed, labels=variant_ids)
    )
    header, rows = _bms_table_rows(variant_bms, variant_ids)
    write_csv(out / "bms_variants.csv", header, rows)
    atomic_write_json(
        out / "bms_variants.json", {k: v.to_json() for k, v in variant_bms.items()}
    )

    for family_key, partition in FAMILY_PARTITIONS.items():
        usable = {
            fam: tuple(v for v in members if v in variant_ids)
            for fam, members in partition.items()
        }
        if any(not members for members in usable.values()):
            continue
        fam_bms = bms_by_condition(
            lambda ev: family_bms(ev, variant_ids, usable, mc_samples=mc_samples, seed=cfg.seed)
        )
        labels = tuple(usable.keys())
        header, rows = _bms_table_rows(fam_bms, labels)
        write_csv(out / f"bms_family_{family_key}.csv", header, rows)
        atomic_write_json(
            out / f"bms_family_{family_key}.json",
            {k: v.to_json() for k, v in fam_bms.items()},
        )
    click.echo(f"selection reports written to {out}")


@main.command()
@click.option("--data", "data_path", required=True, type=click.Path(exists=True), help="Session file or directory.")
@click.option("--fits", "fits_dir", type=click.Path(exists=True, file_okay=False), default=None, help="Optional fit results for parameter comparisons.")
@click.option("--fit-variant", default="rf_pr", help="Variant whose fitted parameters are compared across adaptiveness groups.")
@click.option("--alpha-level", type=float, default=0.05)
@common_options
def analyze(data_path, fits_dir, fit_variant, alpha_level, seed, config_path, out_dir):
    """Trend tests, adaptiveness classification, and group statistics."""
    cfg = _resolve(config_path, seed, out_dir)
    sessions = load_sessions(data_path)
    out = Path(cfg.out_dir)

    trend_rows = []
    labels: dict[str, str] = {}
    for data in sessions:
        series = data.click_counts()
        trend = mann_kendall(series)
        label = classify_adaptiveness(data, alpha_level)
        labels[data.participant_id] = label
        report = validate_session_quiet(data)
        trend_rows.append(
            [
                data.participant_id,
                data.condition.label,
                trend.S,
                trend.variance_S,
                trend.z,
                trend.p_two_sided,
                label,
                report,
            ]
        )
    write_csv(
        out / "trend_tests.csv",
        ["participant_id", "condition", "S", "var_S", "z", "p", "label", "excluded"],
        trend_rows,
    )
    write_csv(
        out / "feature_catalog.csv",
        ["index", "name", "family", "termination_semantics"],
        catalog_to_csv_rows(),
    )

    by_condition: dict[str, list[ParticipantData]] = {}
    for data in sessions:
        by_condition.setdefault(data.condition.label, []).append(data)
    for label, group in sorted(by_condition.items()):
        clicks = np.vstack([d.click_counts() for d in group])
        write_csv(
            out / f"curves_{label}.csv",
            ["trial", "mean_clicks", "sem"],
            mean_click_curve(clicks),
        )

    group_rows = []
    if len(by_condition) >= 2:
        mean_clicks = {
            label: [float(d.click_counts().mean()) for d in group]
            for label, group in sorted(by_condition.items())
        }
        h, p = kruskal_wallis(list(mean_clicks.values()))
        group_rows.append(["kruskal_wallis", "all", "", h, p, ""])
        pairs = [
            (a, b)
            for i, a in enumerate(sorted(mean_clicks))
            for b in sorted(mean_clicks)[i + 1:]
        ]
        for a, b in pairs:
            res = wilcoxon_ranksum(mean_clicks[a], mean_clicks[b])
            group_rows.append(
                ["wilcoxon_ranksum", a, b, res.rank_sum, res.p, res.method]
            )
    write_csv(
        out / "group_tests.csv",
        ["test", "group_a", "group_b", "statistic", "p", "method"],
        group_rows,
    )

    if fits_dir is not None:
        fits = [f for f in _load_fits(Path(fits_dir)) if f.variant == fit_variant]
        if not fits:
            raise DataError(f"no {fit_variant} fits in {fits_dir}")
        param = "alpha" if fit_variant.startswith(("rf", "hr_rf")) else "prior_var"
        rate_rows = []
        for cond_label, group in sorted(by_condition.items()):
            pids = {d.participant_id for d in group}
            by_label: dict[str, list[float]] = {}
            for f in fits:
                if f.participant_id in pids:
                    by_label.setdefault(labels[f.participant_id], []).append(
                        f.best_params[param]
                    )
            nonempty = {k: v for k, v in by_label.items() if v}
            if len(nonempty) < 2:
                continue
            comparison = compare_group_parameters(nonempty, param)
            for grp, mean in sorted(comparison.group_means.items()):
                rate_rows.append([cond_label, "mean", grp, "", mean, "", ""])
            for c in comparison.comparisons:
                rate_rows.append(
                    [cond_label, "test", c.group_a, c.group_b, c.rank_sum, c.p_raw, c.p_corrected]
                )
        write_csv(
            out / f"parameter_comparison_{fit_variant}_{param}.csv",
            ["condition", "row", "group_a", "group_b", "value", "p_raw", "p_corrected"],
            rate_rows,
        )
    click.echo(f"analysis reports written to {out}")


def validate_session_quiet(data: ParticipantData) -> bool:
    """Exclusion flag only (no planning in any trial)."""
    return bool(all(len(r.clicks) == 0 for r in data.records))


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@click.option("--trials", type=int, default=env.DEFAULT_TRIALS_PER_SESSION, help="Trials per session.")
@click.option("--condition", default=None, help="Pin every session to one condition.")
@common_options
def serve(host, port, trials, condition, seed, config_path, out_dir):
    """Run the live experiment HTTP service; sessions are saved to --out-dir."""
    import uvicorn

    from .service import create_app

    cfg = _resolve(config_path, seed, out_dir)
    if condition is not None and condition not in {c.label for c in condition_presets()}:
        raise ConfigError(f"unknown condition {condition!r}")
    app = create_app(
        data_dir=Path(cfg.out_dir),
        topology=cfg.topology(),
        n_trials=trials,
        condition=condition,
        seed=cfg.seed,
    )
    click.echo(f"serving on http://{host}:{port} (sessions -> {cfg.out_dir})")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.argument("files", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@common_options
def validate(files, seed, config_path, out_dir):
    """Check session files against every schema invariant."""
    any_invalid = False
    for path in files:
        report = validate_session(path)
        click.echo(f"{path}: {report}")
        if not report.ok:
            any_invalid = True
    if any_invalid:
        sys.exit(EXIT_DATA)


if __name__ == "__main__":
    main()
