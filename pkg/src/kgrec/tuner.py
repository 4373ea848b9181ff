"""Seeded random search over discrete hyperparameter spaces."""
from __future__ import annotations

import itertools
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Mapping

import numpy as np

from kgrec.errors import ValidationError

log = logging.getLogger(__name__)

# Domains reconstructed from the envelope of reported optima.
DEFAULT_DOMAINS = {
    "walk_length": [40, 60, 80, 100],
    "num_walks": [10, 20, 25, 40, 50],
    "dimension": [128, 256, 512, 1024],
    "window": [20, 25, 30],
    "p": [0.25, 0.5, 1.0, 2.0],
    "q": [1.0, 2.0, 4.0],
}
NODE2VEC_ONLY = ("p", "q")


@dataclass(frozen=True)
class SearchSpace:
    domains: Mapping[str, tuple]

    def __post_init__(self):
        domains = {}
        for name, values in self.domains.items():
            values = tuple(values)
            if not values:
                raise ValidationError(f"empty domain for {name!r}")
            if len(set(values)) != len(values):
                raise ValidationError(f"duplicate values in domain for {name!r}")
            domains[name] = values
        object.__setattr__(self, "domains", dict(sorted(domains.items())))

    @classmethod
    def default(cls, strategy: str = "uniform") -> "SearchSpace":
        return cls(DEFAULT_DOMAINS).for_strategy(strategy)

    @classmethod
    def from_json(cls, path) -> "SearchSpace":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValidationError("space file must be a JSON object of name -> list of values")
        return cls(data)

    def for_strategy(self, strategy: str) -> "SearchSpace":
        """Drop p and q unless the strategy is node2vec."""
        if strategy == "node2vec":
            return self
        return SearchSpace({k: v for k, v in self.domains.items() if k not in NODE2VEC_ONLY})

    @property
    def size(self) -> int:
        return math.prod(len(v) for v in self.domains.values())

    def sample(self, rng: np.random.Generator) -> dict:
        return {k: v[int(rng.integers(len(v)))] for k, v in self.domains.items()}

    def __iter__(self):
        names = list(self.domains)
        for combo in itertools.product(*self.domains.values()):
            yield dict(zip(names, combo))


@dataclass
class TrialResult:
    index: int
    params: dict
    seed: int
    auc: float | None
    wall_time: float = field(default=0.0, compare=False)
    error: str | None = None

    def __post_init__(self):
        if self.auc is not None and not 0.0 <= self.auc <= 1.0:
            raise ValidationError(f"trial {self.index}: AUC {self.auc} outside [0, 1]")

    @property
    def ok(self) -> bool:
        return self.auc is not None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def trial_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1, dtype=np.uint32)[0])


def sample_configs(space: SearchSpace, trials: int, seed: int) -> list:
    """Draw ``trials`` configs, avoiding repeats until the space is exhausted."""
    rng = np.random.default_rng(seed)
    seen = set()
    out = []
    for _ in range(trials):
        if len(seen) >= space.size:
            seen.clear()
        while True:
            params = space.sample(rng)
            key = tuple(params.items())
            if key not in seen:
                break
        seen.add(key)
        out.append(params)
    return out


def random_search(space: SearchSpace, trials: int, objective: Callable[[dict, int], float], seed: int = 0,
                  log_path=None):
    """Evaluate ``trials`` sampled configs; return ``(best params, trial results)``.

    ``objective(params, trial_seed)`` returns a validation AUC.  A raising
    objective marks the trial failed and the search continues.  The best trial
    is the highest AUC, earliest index on ties.
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    results = []
    log_fh = open(log_path, "w", encoding="utf-8") if log_path else None
    try:
        for index, params in enumerate(sample_configs(space, trials, seed)):
            s = trial_seed(seed, index)
            start = time.perf_counter()
            try:
                value = float(objective(dict(params), s))
                result = TrialResult(index, dict(params), s, value, time.perf_counter() - start)
            except Exception as exc:  # noqa: BLE001 - a failed trial must not stop the search
                log.warning("trial %d failed: %s", index, exc)
                result = TrialResult(index, dict(params), s, None, time.perf_counter() - start, repr(exc))
            log.info("trial %d %s -> %s", index, params, result.auc)
            results.append(result)
            if log_fh:
                log_fh.write(result.to_json() + "\n")
                log_fh.flush()
    finally:
        if log_fh:
            log_fh.close()
    ok = [r for r in results if r.ok]
    if not ok:
        return None, results
    best = max(ok, key=lambda r: (r.auc, -r.index))
    return best.params, results
