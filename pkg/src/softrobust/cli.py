"""Command line entry points: gen-data, train, eval, compare.

Seed discipline: every command derives its generators as
default_rng([seed, stream]) with stream 0 for environment construction plus
baseline data, 1 for training, and 2 for evaluation. Rebuilding the
environment replays stream 0 from the start, so gen-data, train, and eval
all see the same true model for a given seed, and the evaluation model set
is identical across compare variants (paired comparison).

All files are written deterministically: CSV floats use 17 significant
digits, rows end with a bare newline, and the wall_ms column is always 0
(measured wall time goes to stdout, never into files).
"""

from __future__ import annotations

import csv
import dataclasses
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import click
import numpy as np

from .algo import StepSchedule, TrainConfig, run_actor_critic, run_policy_gradient
from .envs import (
    AssetDomainSpec,
    CartPoleDomainSpec,
    InventoryDomainSpec,
    generate_baseline_data,
    make_asset_env,
    make_cartpole_env,
    make_inventory_env,
)
from .mdp import TabularMdp, finite_horizon_policy_value, simulate, discounted_return
from .policy import SoftmaxPolicy
from .posterior import TransitionLog, posterior_from_data

STREAM_GEN, STREAM_TRAIN, STREAM_EVAL = 0, 1, 2

DOMAINS = ("asset", "inventory", "cartpole")
ALGOS = ("pg", "ac")
EVAL_MODES = ("epistemic", "aleatoric")
COMPARE_VARIANTS = ("risk_neutral", "risk_averse", "soft_robust")


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(message)
        self.field = field


@dataclass
class RunConfig:
    """Flat, JSON-round-trippable run configuration."""

    domain: str = "asset"
    algo: str = "pg"
    seed: int = 0
    alpha: float = 0.9
    beta: float = 1.0
    episodes: int = 400
    models: int = 20
    horizon: int = 2
    n_trajectories: int = 5
    penalty_sign: str = "robust"
    td_mode: str = "standard"
    lambda0: float = 0.0
    lambda_max: float = 100.0
    zeta1_base: float = 0.01
    zeta1_exp: float = 1.0
    zeta2_base: float = 0.05
    zeta2_exp: float = 0.8
    zeta3_base: float = 0.1
    zeta3_exp: float = 0.6
    prior: float = 0.05
    baseline_samples: int = 6000
    baseline_episode_len: int = 2
    eval_models: int = 200
    eval_mode: str = "epistemic"
    model_source: str = "posterior"
    data: str | None = None
    out: str = "runs/out"

    def validate(self):
        def need(cond, field, msg):
            if not cond:
                raise ConfigError(field, f"{field}: {msg}")

        need(self.domain in DOMAINS, "domain", f"must be one of {DOMAINS}, got {self.domain!r}")
        need(self.algo in ALGOS, "algo", f"must be one of {ALGOS}, got {self.algo!r}")
        need(self.seed >= 0, "seed", f"must be >= 0, got {self.seed}")
        need(
            np.isfinite(self.alpha) and self.alpha > 0,
            "alpha", f"must be positive and finite, got {self.alpha}",
        )
        need(np.isfinite(self.beta), "beta", f"must be finite, got {self.beta}")
        need(self.episodes >= 0, "episodes", f"must be >= 0, got {self.episodes}")
        need(self.models >= 1, "models", f"must be >= 1, got {self.models}")
        need(self.horizon >= 1, "horizon", f"must be >= 1, got {self.horizon}")
        need(
            self.n_trajectories >= 1,
            "n_trajectories", f"must be >= 1, got {self.n_trajectories}",
        )
        need(
            self.penalty_sign in ("paper", "robust"),
            "penalty_sign", f"must be 'paper' or 'robust', got {self.penalty_sign!r}",
        )
        need(
            self.td_mode in ("paper", "standard"),
            "td_mode", f"must be 'paper' or 'standard', got {self.td_mode!r}",
        )
        need(self.lambda0 >= 0, "lambda0", f"must be >= 0, got {self.lambda0}")
        need(
            self.lambda_max >= self.lambda0,
            "lambda_max", f"must be >= lambda0, got {self.lambda_max}",
        )
        for name in ("zeta1", "zeta2", "zeta3"):
            base = getattr(self, f"{name}_base")
            exp = getattr(self, f"{name}_exp")
            need(base >= 0, f"{name}_base", f"must be >= 0, got {base}")
            need(0.5 < exp <= 1.0, f"{name}_exp", f"must be in (0.5, 1], got {exp}")
        need(self.prior > 0, "prior", f"must be positive, got {self.prior}")
        need(
            self.baseline_samples >= 1,
            "baseline_samples", f"must be >= 1, got {self.baseline_samples}",
        )
        need(
            self.baseline_episode_len >= 1,
            "baseline_episode_len", f"must be >= 1, got {self.baseline_episode_len}",
        )
        need(self.eval_models >= 1, "eval_models", f"must be >= 1, got {self.eval_models}")
        need(
            self.eval_mode in EVAL_MODES,
            "eval_mode", f"must be one of {EVAL_MODES}, got {self.eval_mode!r}",
        )
        need(
            self.model_source in ("posterior", "mean"),
            "model_source", f"must be 'posterior' or 'mean', got {self.model_source!r}",
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            episodes=self.episodes,
            n_models=self.models,
            horizon=self.horizon,
            alpha=self.alpha,
            beta=self.beta,
            penalty_sign=self.penalty_sign,
            td_mode=self.td_mode,
            n_trajectories=self.n_trajectories,
            lambda0=self.lambda0,
            lambda_max=self.lambda_max,
            zeta1=StepSchedule(self.zeta1_base, self.zeta1_exp),
            zeta2=StepSchedule(self.zeta2_base, self.zeta2_exp),
            zeta3=StepSchedule(self.zeta3_base, self.zeta3_exp),
            model_source=self.model_source,
        )


# Per-domain defaults layered between the dataclass defaults and any config
# file / flag overrides. Budgets sized for desk-scale runs; step-size bases
# scale with the horizon because the per-model accumulators are divided by T.
DOMAIN_DEFAULTS = {
    "asset": dict(
        algo="pg", episodes=800, models=20, horizon=2, n_trajectories=3,
        prior=0.05, baseline_samples=2000, baseline_episode_len=2,
        lambda_max=10.0,
        zeta1_base=0.2, zeta1_exp=0.8,
        zeta2_base=0.5, zeta2_exp=0.8,
    ),
    "inventory": dict(
        algo="ac", episodes=500, models=10, horizon=50,
        alpha=0.1, beta=12.0,
        prior=0.3, baseline_samples=1000, baseline_episode_len=50,
        lambda_max=5.0,
        zeta1_base=2.0, zeta1_exp=0.8,
        zeta2_base=10.0, zeta2_exp=0.8,
        zeta3_base=10.0, zeta3_exp=0.55,
    ),
    "cartpole": dict(
        algo="ac", episodes=600, models=2, horizon=100,
        prior=0.01, baseline_samples=10000, baseline_episode_len=100,
        lambda_max=3.0,
        zeta1_base=0.5, zeta1_exp=0.8,
        zeta2_base=20.0, zeta2_exp=0.6,
        zeta3_base=20.0, zeta3_exp=0.55,
    ),
}

_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _parse_field(name: str, raw):
    """Coerce a CLI/file value to the config field's type."""
    if name not in _FIELD_TYPES:
        raise ConfigError(name, f"{name}: unknown config field")
    if raw is None:
        return None
    target = _FIELD_TYPES[name]
    try:
        if target == "int":
            return int(raw)
        if target == "float":
            return float(raw)
    except (TypeError, ValueError):
        raise ConfigError(name, f"{name}: cannot parse {raw!r}") from None
    return str(raw)


def resolve_config(config_path: str | None, overrides: dict) -> RunConfig:
    """Layered resolution: flag > config file > domain defaults > defaults."""
    file_cfg = {}
    if config_path is not None:
        path = Path(config_path)
        if not path.exists():
            raise ConfigError("config", f"config: file not found: {config_path}")
        try:
            file_cfg = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError("config", f"config: invalid JSON: {e}") from None
        if not isinstance(file_cfg, dict):
            raise ConfigError("config", "config: top level must be an object")
    overrides = {k: v for k, v in overrides.items() if v is not None}
    domain = str(
        overrides.get("domain") or file_cfg.get("domain") or RunConfig.domain
    )
    if domain not in DOMAINS:
        raise ConfigError("domain", f"domain: must be one of {DOMAINS}, got {domain!r}")
    merged = dict(DOMAIN_DEFAULTS[domain])
    merged["domain"] = domain
    for layer in (file_cfg, overrides):
        for key, value in layer.items():
            merged[key] = _parse_field(key, value)
    cfg = RunConfig(**{k: v for k, v in merged.items() if v is not None})
    cfg.validate()
    return cfg


def build_domain(cfg: RunConfig) -> tuple[TabularMdp, dict, np.random.Generator]:
    """Construct the true model on the gen stream.

    Identical for every command that shares the seed; the returned generator
    is positioned after the construction draws, ready for baseline rolls.
    """
    rng = np.random.default_rng([cfg.seed, STREAM_GEN])
    if cfg.domain == "asset":
        mdp, metadata = make_asset_env(AssetDomainSpec())
    elif cfg.domain == "inventory":
        mdp, metadata = make_inventory_env(InventoryDomainSpec())
    else:
        mdp, metadata = make_cartpole_env(CartPoleDomainSpec(), rng)
    return mdp, metadata, rng


@dataclass(frozen=True)
class ReturnSummary:
    mean: float
    std: float
    minimum: float
    maximum: float
    p5: float
    p25: float
    p50: float
    p75: float
    p95: float
    count: int

    @classmethod
    def from_returns(cls, returns: np.ndarray) -> "ReturnSummary":
        returns = np.asarray(returns, dtype=float)
        if returns.size == 0:
            raise ValueError("cannot summarize zero returns")
        p = np.percentile(returns, [5, 25, 50, 75, 95])
        return cls(
            mean=float(returns.mean()),
            std=float(returns.std()),
            minimum=float(returns.min()),
            maximum=float(returns.max()),
            p5=float(p[0]), p25=float(p[1]), p50=float(p[2]),
            p75=float(p[3]), p95=float(p[4]),
            count=int(returns.size),
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def fmt(x) -> str:
    """Canonical float formatting for CSV cells: 17 significant digits."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def write_csv(path: Path, header: list[str], rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([c if isinstance(c, str) else fmt(c) for c in row])


def _write_json(path: Path, payload: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_data(cfg: RunConfig) -> TransitionLog:
    data_path = cfg.data or str(Path(cfg.out) / "transitions.txt")
    if not Path(data_path).exists():
        raise ConfigError("data", f"data: transition log not found: {data_path}")
    return TransitionLog.load(data_path)


def _fit_posterior(cfg: RunConfig, true_mdp: TabularMdp):
    return posterior_from_data(cfg.prior, _load_data(cfg), true_mdp)


def _train_once(cfg: RunConfig, posterior):
    rng = np.random.default_rng([cfg.seed, STREAM_TRAIN])
    train_cfg = cfg.train_config()
    if cfg.algo == "pg":
        return run_policy_gradient(train_cfg, posterior, rng)
    return run_actor_critic(train_cfg, posterior, rng)


def _write_train_outputs(out_dir: Path, cfg: RunConfig, result, metadata: dict):
    rows = [
        [t.episode, t.lam, t.constraint_estimate, t.mean_return, t.min_return,
         t.theta_norm, 0.0]
        for t in result.traces
    ]
    write_csv(
        out_dir / "traces.csv",
        ["episode", "lam", "constraint_estimate", "mean_return", "min_return",
         "theta_norm", "wall_ms"],
        rows,
    )
    if cfg.domain == "asset":
        names = metadata["asset_names"]
        write_csv(
            out_dir / "prob_trace.csv",
            ["episode"] + [f"p_{n}" for n in names],
            [[t.episode, *t.initial_state_probs] for t in result.traces],
        )
    payload = {
        "n_states": result.policy.n_states,
        "n_actions": result.policy.n_actions,
        "theta": result.policy.theta.tolist(),
        "critic_w": None if result.critic is None else result.critic.w.tolist(),
    }
    _write_json(out_dir / "policy.json", payload)
    _write_json(out_dir / "config.json", cfg.to_dict())


def _eval_returns(cfg: RunConfig, posterior, policy: SoftmaxPolicy, true_mdp: TabularMdp) -> np.ndarray:
    rng = np.random.default_rng([cfg.seed, STREAM_EVAL])
    if cfg.eval_mode == "aleatoric":
        model = posterior.mean_model()
        return np.asarray(
            [
                discounted_return(simulate(model, policy, cfg.horizon, rng), model.discount)
                for _ in range(cfg.eval_models)
            ]
        )
    models = posterior.sample_models(cfg.eval_models, rng)
    out = np.empty(cfg.eval_models)
    for i, m in enumerate(models):
        # exact value over the training horizon: infinite-horizon values
        # would let posterior noise in rarely visited rows compound forever
        v = finite_horizon_policy_value(m, policy, cfg.horizon)
        out[i] = float(m.initial_dist @ v)
    return out


def _fail(e: Exception):
    field = getattr(e, "field", None)
    payload = {"error": str(e)}
    if field is not None:
        payload["field"] = field
    click.echo(json.dumps(payload), err=True)
    sys.exit(1)


def _config_options(f):
    options = [
        click.option("--config", "config_path", default=None, help="JSON config file."),
        click.option("--seed", default=None, help="Base seed for all streams."),
        click.option("--domain", default=None, help="asset | inventory | cartpole."),
        click.option("--algo", default=None, help="pg | ac."),
        click.option("--alpha", default=None, help="Risk aversion level."),
        click.option("--beta", default=None, help="Risk constraint floor."),
        click.option("--episodes", default=None, help="Training episodes."),
        click.option("--models", default=None, help="Models sampled per episode."),
        click.option("--horizon", default=None, help="Steps per trajectory."),
        click.option("--n-trajectories", default=None, help="Trajectories per model (pg)."),
        click.option("--penalty-sign", default=None, help="paper | robust."),
        click.option("--td-mode", default=None, help="paper | standard."),
        click.option("--prior", default=None, help="Dirichlet prior concentration."),
        click.option("--samples", "baseline_samples", default=None,
                     help="Baseline transitions to generate."),
        click.option("--eval-models", default=None, help="Models for evaluation."),
        click.option("--data", default=None, help="Transition log path."),
        click.option("--out", default=None, help="Output directory."),
    ]
    for opt in reversed(options):
        f = opt(f)
    return f


def _resolve(config_path, kwargs) -> RunConfig:
    return resolve_config(config_path, kwargs)


@click.group()
def main():
    """Soft-robust risk-constrained policy optimization."""


@main.command("gen-data")
@_config_options
def gen_data(config_path, **kwargs):
    """Build the true model and log baseline transitions."""
    try:
        cfg = _resolve(config_path, kwargs)
        true_mdp, metadata, rng = build_domain(cfg)
        behavior = SoftmaxPolicy.uniform(true_mdp.n_states, true_mdp.n_actions)
        log = generate_baseline_data(
            true_mdp, behavior, cfg.baseline_samples, rng,
            episode_length=cfg.baseline_episode_len,
        )
        out_dir = Path(cfg.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        log.save(out_dir / "transitions.txt")
        true_mdp.save(out_dir / "true_mdp.json")
        _write_json(out_dir / "metadata.json", metadata)
        click.echo(f"wrote {out_dir / 'transitions.txt'} ({len(log)} transitions)")
    except (ValueError, OSError) as e:
        _fail(e)


@main.command("train")
@_config_options
def train(config_path, **kwargs):
    """Fit the posterior from logged data and train a policy."""
    try:
        cfg = _resolve(config_path, kwargs)
        true_mdp, metadata, _ = build_domain(cfg)
        posterior = _fit_posterior(cfg, true_mdp)
        result = _train_once(cfg, posterior)
        out_dir = Path(cfg.out)
        _write_train_outputs(out_dir, cfg, result, metadata)
        last = result.traces[-1] if result.traces else None
        click.echo(f"wrote {out_dir / 'traces.csv'} ({len(result.traces)} episodes)")
        if last is not None:
            click.echo(
                f"final lambda {last.lam:.6g} mean_return {last.mean_return:.6g} "
                f"constraint {last.constraint_estimate:.6g}"
            )
        click.echo(f"wall_ms {result.wall_ms_total:.1f}")
    except (ValueError, OSError) as e:
        _fail(e)


@main.command("eval")
@click.option("--policy", "policy_path", default=None, help="policy.json from train.")
@click.option("--aleatoric", is_flag=True, default=False,
              help="Per-trajectory returns under the posterior mean model.")
@_config_options
def eval_cmd(config_path, policy_path, aleatoric, **kwargs):
    """Evaluate a trained policy across posterior model draws."""
    try:
        if aleatoric:
            kwargs["eval_mode"] = "aleatoric"
        cfg = _resolve(config_path, kwargs)
        path = Path(policy_path) if policy_path else Path(cfg.out) / "policy.json"
        if not path.exists():
            raise ConfigError("policy", f"policy: file not found: {path}")
        payload = json.loads(path.read_text(encoding="utf-8"))
        policy = SoftmaxPolicy(
            np.asarray(payload["theta"], dtype=float),
            int(payload["n_states"]), int(payload["n_actions"]),
        )
        true_mdp, _, _ = build_domain(cfg)
        posterior = _fit_posterior(cfg, true_mdp)
        returns = _eval_returns(cfg, posterior, policy, true_mdp)
        out_dir = Path(cfg.out)
        write_csv(
            out_dir / "eval_returns.csv",
            ["model_index", "return"],
            [[i, r] for i, r in enumerate(returns)],
        )
        summary = ReturnSummary.from_returns(returns)
        _write_json(
            out_dir / "eval_summary.json",
            {"mode": cfg.eval_mode, "summary": summary.to_dict()},
        )
        click.echo(f"wrote {out_dir / 'eval_returns.csv'} ({returns.size} returns)")
        click.echo(f"mean {summary.mean:.6g} std {summary.std:.6g} min {summary.minimum:.6g}")
    except (ValueError, OSError) as e:
        _fail(e)


def variant_config(cfg: RunConfig, variant: str) -> RunConfig:
    """Config delta for one compare variant."""
    if variant == "risk_neutral":
        return replace(cfg, lambda0=0.0, zeta1_base=0.0)
    if variant == "risk_averse":
        return replace(cfg, model_source="mean")
    if variant == "soft_robust":
        return replace(cfg)
    raise ConfigError("variant", f"variant: unknown {variant!r}")


@main.command("compare")
@_config_options
def compare(config_path, **kwargs):
    """Train and evaluate the three standard variants on shared data."""
    try:
        cfg = _resolve(config_path, kwargs)
        true_mdp, metadata, rng = build_domain(cfg)
        out_dir = Path(cfg.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        if cfg.data is None and not (out_dir / "transitions.txt").exists():
            behavior = SoftmaxPolicy.uniform(true_mdp.n_states, true_mdp.n_actions)
            log = generate_baseline_data(
                true_mdp, behavior, cfg.baseline_samples, rng,
                episode_length=cfg.baseline_episode_len,
            )
            log.save(out_dir / "transitions.txt")
        shared_data = cfg.data or str(out_dir / "transitions.txt")
        rows = []
        summaries = {}
        for variant in COMPARE_VARIANTS:
            vcfg = variant_config(
                replace(cfg, data=shared_data, out=str(out_dir / variant)), variant
            )
            posterior = _fit_posterior(vcfg, true_mdp)
            result = _train_once(vcfg, posterior)
            _write_train_outputs(Path(vcfg.out), vcfg, result, metadata)
            returns = _eval_returns(vcfg, posterior, result.policy, true_mdp)
            rows.extend([variant, i, r] for i, r in enumerate(returns))
            summaries[variant] = ReturnSummary.from_returns(returns).to_dict()
            click.echo(
                f"{variant}: mean {summaries[variant]['mean']:.6g} "
                f"std {summaries[variant]['std']:.6g} "
                f"min {summaries[variant]['minimum']:.6g}"
            )
        write_csv(out_dir / "compare_returns.csv", ["variant", "model_index", "return"], rows)
        neutral_var = summaries["risk_neutral"]["std"] ** 2
        robust_var = summaries["soft_robust"]["std"] ** 2
        ratio = robust_var / neutral_var if neutral_var > 0 else float("inf")
        _write_json(
            out_dir / "compare_summary.json",
            {
                "variants": summaries,
                "variance_ratio_soft_robust_vs_risk_neutral": ratio,
            },
        )
        click.echo(f"wrote {out_dir / 'compare_returns.csv'} ({len(rows)} rows)")
    except (ValueError, OSError) as e:
        _fail(e)


if __name__ == "__main__":
    main()
