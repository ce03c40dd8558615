"""Run configuration: TOML parsing, defaults and the provenance digest."""

from __future__ import annotations

import hashlib
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError
from .initialize import InitConfig
from .priors import Hyperparameters
from .sampler import SamplerSchedule

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["RunConfig", "load_config", "DEFAULT_CONFIG_TOML"]

DEFAULT_CONFIG_TOML = """\
# Default run configuration; every value shown here is the built-in default.
# lambda_a = 0.0 means "half the number of objects".
n_objects = 0
seed = 0
chains = 1

[hyperparameters]
lambda_k = 2.0
lambda_a = 0.0
gamma_k = 1.0
gamma_a = 1.0
nu_a = 2.0
alpha = 2.0
beta = 2.0
a_normalizer_printed = true

[init]
alpha_p = 2.0
beta_p = 2.0
k_max = 5
a_max = 12
kmeans_restarts = 10
stage_lengths = [1000, 1000]

[schedule]
iterations = 100000
burn_in = 20000
thin = 10
rw_step_theta = 0.5
rw_step_phi = 0.5
sigma_split = 1.0
adapt_burnin = true

[schedule.move_probabilities]
update_levels = 0.35
reallocate = 0.35
split_merge_theta = 0.10
split_merge_phi = 0.10
add_delete_theta = 0.05
add_delete_phi = 0.05
"""


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs beyond its input files."""

    hyper_overrides: dict = field(default_factory=dict)
    init: InitConfig = field(default_factory=InitConfig)
    schedule: SamplerSchedule = field(default_factory=SamplerSchedule)
    seed: int = 0
    chains: int = 1
    n_objects: int = 0
    digest: str = "defaults"

    def hyperparameters(self, n: int) -> Hyperparameters:
        overrides = dict(self.hyper_overrides)
        if overrides.get("lambda_a", 0.0) == 0.0:
            overrides.pop("lambda_a", None)
        return Hyperparameters.defaults(n, **overrides)


def _section(doc: dict, name: str) -> dict:
    value = doc.get(name, {})
    if not isinstance(value, dict):
        raise DataError(f"config section [{name}] must be a table")
    return dict(value)


def load_config(path=None) -> RunConfig:
    """Parse a TOML config file; absent keys keep their defaults."""
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        raw = path.read_bytes()
        doc = tomllib.loads(raw.decode("utf-8"))
    except (OSError, UnicodeDecodeError, tomllib.TOMLDecodeError) as err:
        raise DataError(f"cannot parse config {path}: {err}") from err
    digest = hashlib.sha256(raw).hexdigest()[:16]

    hyper = _section(doc, "hyperparameters")
    unknown = set(hyper) - {
        "lambda_k", "lambda_a", "gamma_k", "gamma_a", "nu_a", "alpha", "beta",
        "a_normalizer_printed",
    }
    if unknown:
        raise DataError(f"unknown hyperparameter keys: {sorted(unknown)}")

    init_doc = _section(doc, "init")
    try:
        init = InitConfig(
            alpha_p=float(init_doc.get("alpha_p", 2.0)),
            beta_p=float(init_doc.get("beta_p", 2.0)),
            k_range=tuple(range(0, int(init_doc.get("k_max", 5)) + 1)),
            a_max=int(init_doc.get("a_max", 12)),
            kmeans_restarts=int(init_doc.get("kmeans_restarts", 10)),
            stage_lengths=tuple(int(x) for x in init_doc.get("stage_lengths", (1000, 1000))),
        )
    except (TypeError, ValueError) as err:
        raise DataError(f"bad [init] section: {err}") from err

    sched_doc = _section(doc, "schedule")
    moves = sched_doc.pop("move_probabilities", None)
    kwargs = {}
    for key in ("iterations", "burn_in", "thin"):
        if key in sched_doc:
            kwargs[key] = int(sched_doc.pop(key))
    for key in ("rw_step_theta", "rw_step_phi", "sigma_split"):
        if key in sched_doc:
            kwargs[key] = float(sched_doc.pop(key))
    if "adapt_burnin" in sched_doc:
        kwargs["adapt_burnin"] = bool(sched_doc.pop("adapt_burnin"))
    for key in ("max_theta_levels", "max_skill_levels"):
        if key in sched_doc:
            kwargs[key] = int(sched_doc.pop(key))
    if sched_doc:
        raise DataError(f"unknown schedule keys: {sorted(sched_doc)}")
    if moves is not None:
        kwargs["move_probabilities"] = {str(k): float(v) for k, v in moves.items()}
    try:
        schedule = SamplerSchedule(**kwargs)
    except ValueError as err:
        raise DataError(f"bad [schedule] section: {err}") from err

    return RunConfig(
        hyper_overrides=hyper,
        init=init,
        schedule=schedule,
        seed=int(doc.get("seed", 0)),
        chains=int(doc.get("chains", 1)),
        n_objects=int(doc.get("n_objects", 0)),
        digest=digest,
    )
