"""Tilt-parameter scans: one row of fidelity quantities per lambda, with a
content-addressed on-disk cache and deterministic CSV emission.
"""
from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional

import numpy as np

from . import __version__
from . import seedfamily as fam
from .optimize import OptimizerConfig, lu_fidelity_lower
from .protocols import run_sequential_protocol
from .states import QuantumState

CSV_COLUMNS = ["lambda", "n_sq", "p_max", "F_0", "F_osbp", "F_prot",
               "F_overlap", "F_lu_lb", "F_lu_ub", "F_triv_ub",
               "F_bisep_1", "F_bisep_12"]


@dataclass(frozen=True)
class ScanConfig:
    lam_min: float = 0.01
    lam_max: float = 0.49
    step: float = 0.01
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    out: Optional[Path] = None
    cache_dir: Optional[Path] = None
    workers: int = 1

    def __post_init__(self):
        if not (0.0 < self.lam_min < self.lam_max < 0.5):
            raise ValueError("need 0 < lam_min < lam_max < 1/2")
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def lambdas(self) -> List[float]:
        n = int(np.floor((self.lam_max - self.lam_min) / self.step + 1e-9)) + 1
        return [round(self.lam_min + i * self.step, 12) for i in range(n)]


class RowCache:
    """Directory-backed cache of final row values (never intermediates)."""

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(command: str, payload: dict, seed: int) -> str:
        blob = json.dumps({"command": command, "payload": payload,
                           "seed": seed, "version": __version__},
                          sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()

    def path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str) -> Optional[dict]:
        p = self.path(key)
        if not p.exists():
            return None
        try:
            return json.loads(p.read_text())
        except (json.JSONDecodeError, OSError):
            return None

    def put(self, key: str, value: dict):
        tmp = self.path(key).with_suffix(".tmp")
        tmp.write_text(json.dumps(value, sort_keys=True))
        tmp.replace(self.path(key))


def compute_row(lam: float, ocfg: OptimizerConfig) -> dict:
    """All scan quantities at one tilt value."""
    seed = fam.seed_state()
    phi = fam.phi_state(lam)
    p_max = fam.pmax_value(lam)
    f0 = fam.f0_value(lam)
    report, _ = run_sequential_protocol(lam, ocfg)
    lu_lb, _ = lu_fidelity_lower(seed, phi, ocfg)
    lu_ub = fam.flu_upper(lam)
    return {
        "lambda": lam,
        "n_sq": fam.nsq(lam),
        "p_max": p_max,
        "F_0": f0,
        "F_osbp": p_max + (1.0 - p_max) * f0,
        "F_prot": report.f_av,
        "F_overlap": fam.overlap(lam),
        "F_lu_lb": min(lu_lb, lu_ub),
        "F_lu_ub": lu_ub,
        "F_triv_ub": fam.ftriv_upper(lam),
        "F_bisep_1": fam.bisep1_value(lam),
        "F_bisep_12": fam.bisep12_value(lam),
    }


def _row_cached(lam: float, ocfg: OptimizerConfig,
                cache: Optional[RowCache]) -> dict:
    if cache is None:
        return compute_row(lam, ocfg)
    key = RowCache.key("scan-row",
                       {"lambda": repr(lam), "restarts": ocfg.restarts,
                        "max_iters": ocfg.max_iters}, ocfg.seed)
    hit = cache.get(key)
    if hit is not None:
        return hit
    row = compute_row(lam, ocfg)
    cache.put(key, row)
    return row


def _worker(args) -> dict:
    lam, ocfg = args
    return compute_row(lam, ocfg)


def run_scan(cfg: ScanConfig) -> List[dict]:
    """Compute all rows, cheapest-correct order: ascending lambda."""
    cache = RowCache(cfg.cache_dir) if cfg.cache_dir else None
    lams = cfg.lambdas()
    rows: List[Optional[dict]] = [None] * len(lams)
    if cfg.workers > 1 and cache is None:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            for i, row in enumerate(pool.map(_worker, [(l, cfg.optimizer) for l in lams])):
                rows[i] = row
    elif cfg.workers > 1:
        todo = [(i, l) for i, l in enumerate(lams)]
        misses = []
        for i, lam in todo:
            key = RowCache.key("scan-row",
                               {"lambda": repr(lam), "restarts": cfg.optimizer.restarts,
                                "max_iters": cfg.optimizer.max_iters}, cfg.optimizer.seed)
            hit = cache.get(key)
            if hit is not None:
                rows[i] = hit
            else:
                misses.append((i, lam, key))
        if misses:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                for (i, lam, key), row in zip(
                        misses, pool.map(_worker, [(l, cfg.optimizer) for _, l, _ in misses])):
                    cache.put(key, row)
                    rows[i] = row
    else:
        for i, lam in enumerate(lams):
            rows[i] = _row_cached(lam, cfg.optimizer, cache)
    return [r for r in rows if r is not None]


def format_value(v) -> str:
    if isinstance(v, float):
        return f"{v:.15g}"
    return str(v)


def write_csv(rows: Iterable[dict], path: Path):
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CSV_COLUMNS)
        for row in rows:
            w.writerow([format_value(row[c]) for c in CSV_COLUMNS])
