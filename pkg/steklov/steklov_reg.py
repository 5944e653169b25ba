import argparse
import json
import logging
import math
import os
import sys
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
import scipy
from pydantic import BaseModel

from steklov import __version__
from steklov.coeff_extract import (
    ExtractionResult,
    FHWeightSpec,
    extract,
    extract_verblunsky,
    fh_moments,
    generic_moments,
    rotate_moments,
    szego_product,
)
from steklov.config import (
    MOMENT_SLACK,
    PlotKind,
    Precision,
    RunConfig,
    Suite,
    canonical_json,
    config_hash,
    load_criteria,
)
from steklov.errors import ArtifactError, ConfigError, SteklovError
from steklov.polynomial_core import read_grid_csv, star, write_frame_csv, write_grid_csv
from steklov.steklov_construct import (
    build_scheme,
    growth_report,
    l4_main_terms,
    lemma_l1_suite,
    residual_report,
    steklov_weight,
)
from steklov.szego_engine import (
    VerblunskyScheme,
    bernstein_szego_grid,
    bernstein_szego_weight,
    double_scheme,
    idi_residuals,
    lemma2_residuals,
    quatro_residual,
    rotate_scheme,
    sum_rule_residual,
    szego_forward,
    transfer_residual,
    wronskian_residual,
)

logger = logging.getLogger(__name__)

LOCK_NAME = ".opuc.lock"
IDENTITY_SAMPLES = 50
ROTATION_SAMPLES = 20
ROTATION_ANGLES = (math.pi / 7, math.pi, 1.0)
IDENTITY_GRID = 1024
ROUND_TRIP_GRID = 4096
L4_DEFAULT_N = 1024
ROUND_TRIP_BLOCK = 8

EXPORT_HELP = """\
plot-data kinds (tidy CSV, one observation per row):
  gamma_vs_main  j, gamma_re, main_re, residual_abs   (needs `extract`)
  weight         theta, w                             (needs `construct`)
  supnorm_curve  n, sup, log_n, ratio                 (needs `verify --suite growth`)
"""

VERIFY_HELP = """\
the l4 suite fits on the first --N parameters (default 1024) and checks the
sum rule on sum_rule.fh_length parameters from the criteria file (default 4096);
either length is extracted and cached in --out-dir when no cached scheme covers it
"""


# ========== REPORT MODELS ==========

class CriterionResult(BaseModel):
    name: str
    value: float
    threshold: float
    passed: bool


class VerifyReport(BaseModel):
    suite: str
    epsilon: float
    passed: bool
    criteria: List[CriterionResult]
    metadata: Dict[str, Any]


class GrowthSummary(BaseModel):
    epsilon: float
    n: List[int]
    sup_phi: List[float]
    ratio_log: List[float]
    steklov_min: List[float]
    l4_C_fit: Optional[float] = None
    l4_slope: Optional[float] = None
    sup_slope: Optional[float] = None
    duo_slope: Optional[float] = None
    flagged: List[int] = []


def at_most(name: str, value: float, threshold: float) -> CriterionResult:
    return CriterionResult(name=name, value=float(value), threshold=float(threshold), passed=bool(value <= threshold))


def at_least(name: str, value: float, threshold: float) -> CriterionResult:
    return CriterionResult(name=name, value=float(value), threshold=float(threshold), passed=bool(value >= threshold))


def above(name: str, value: float, threshold: float) -> CriterionResult:
    return CriterionResult(name=name, value=float(value), threshold=float(threshold), passed=bool(value > threshold))


def count_inversions(values: List[float]) -> int:
    return sum(1 for a, b in zip(values, values[1:]) if b < a)


# ========== ARTIFACTS ==========

def module_versions() -> Dict[str, str]:
    return {"numpy": np.__version__, "pandas": pd.__version__, "scipy": scipy.__version__, "steklov": __version__}


def eps_tag(epsilon: float) -> str:
    return f"{epsilon:g}"


def gamma_file_name(epsilon: float, N: int, precision: Precision) -> str:
    suffix = "_hp" if precision == Precision.HIGH else ""
    return f"fh_gamma_eps{eps_tag(epsilon)}_N{N}{suffix}.json"


class ArtifactStore:
    """Reads and writes deterministic artifacts under out_dir, with an extraction cache"""

    def __init__(self, config: RunConfig):
        self.config = config
        self.out_dir = Path(config.out_dir)
        self.cache_dir = Path(config.cache_dir)
        self.logger = logging.getLogger(__name__)

    def metadata(self, subset: Dict[str, Any]) -> Dict[str, Any]:
        return {"config_hash": config_hash(subset), "code_version": __version__, "modules": module_versions()}

    def csv_metadata(self, subset: Dict[str, Any]) -> Dict[str, str]:
        meta = {"config_hash": config_hash(subset), "code_version": __version__}
        meta.update({f"module_{k}": v for k, v in module_versions().items()})
        return meta

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def write_text(self, name: str, text: str) -> Path:
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            path = self.path(name)
            with open(path, "w", newline="") as fh:
                fh.write(text)
        except OSError as e:
            raise ArtifactError(f"cannot write {name} to {self.out_dir}: {e}", producer="a writable --out") from e
        self.logger.info(f"Wrote {path}")
        return path

    def write_json(self, name: str, payload: Dict[str, Any]) -> Path:
        return self.write_text(name, json_text(payload))

    def require(self, name: str, producer: str) -> Path:
        path = self.path(name)
        if not path.exists():
            raise ArtifactError(f"missing artifact {path}", producer=producer)
        return path

    # extraction cache

    def cache_path(self, key: str) -> Path:
        return self.cache_dir / f"fh_gamma_{key}.json"

    def cached_text(self, key: str) -> Optional[str]:
        path = self.cache_path(key)
        if path.exists():
            return path.read_text()
        return None

    def store_cache(self, key: str, text: str):
        try:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
            self.cache_path(key).write_text(text)
        except OSError as e:
            self.logger.warning(f"Could not write cache {self.cache_path(key)}: {e}")

    def find_gamma(self, epsilon: float, N: int, precision: Precision, largest: bool = False) -> Optional[Path]:
        """Smallest (or largest) extracted scheme in out_dir with at least N parameters"""
        best: Optional[Tuple[int, Path]] = None
        suffix = "_hp" if precision == Precision.HIGH else ""
        for path in self.out_dir.glob(f"fh_gamma_eps{eps_tag(epsilon)}_N*{suffix}.json"):
            tag = path.stem[len(f"fh_gamma_eps{eps_tag(epsilon)}_N"):]
            if suffix:
                tag = tag[: -len(suffix)]
            if not tag.isdigit():
                continue
            count = int(tag)
            if count < N:
                continue
            if best is None or (count > best[0] if largest else count < best[0]):
                best = (count, path)
        return best[1] if best else None


def json_text(payload: Dict[str, Any]) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


@contextmanager
def out_dir_lock(out_dir: Path):
    """One command at a time per output directory"""
    out_dir.mkdir(parents=True, exist_ok=True)
    lock = out_dir / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ConfigError(f"{lock} exists: another command is using {out_dir}")
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        try:
            lock.unlink()
        except FileNotFoundError:
            pass


# ========== HANDLERS ==========

@dataclass
class CommandResult:
    success: bool
    exit_code: int = 0
    files: List[str] = field(default_factory=list)
    error: Optional[str] = None


class CommandHandler:
    name = "command"

    def __init__(self, config: RunConfig, criteria_path: Optional[Path] = None):
        self.config = config
        self.criteria_path = criteria_path
        self.store = ArtifactStore(config)
        self.stage = "setup"
        self.logger = logging.getLogger(__name__)

    def run(self) -> CommandResult:
        raise NotImplementedError

    def execute(self) -> CommandResult:
        self.logger.info(f"Executing {self.name} (epsilon={self.config.epsilon}, m={self.config.m})...")
        try:
            result = self.run()
            self.logger.info(f"{self.name}: finished, success={result.success}")
            return result
        except ConfigError as e:
            self.logger.error(f"{self.name}: invalid configuration at stage {self.stage}: {e}")
            return CommandResult(success=False, exit_code=2, error=str(e))
        except SteklovError as e:
            self.logger.error(f"{self.name}: stage {self.stage} failed: {e}")
            return CommandResult(success=False, exit_code=1, error=str(e))

    # shared pipeline pieces

    def extraction_subset(self, N: int) -> Dict[str, Any]:
        return {
            "artifact": "fh_gamma",
            "epsilon": self.config.epsilon,
            "N": N,
            "precision": self.config.precision.value,
        }

    def extract_gamma(self, N: int) -> Tuple[Path, bool]:
        """Write fh_gamma for N parameters, reusing the cache; returns the path and whether it was a hit"""
        subset = self.extraction_subset(N)
        key = config_hash(subset)
        name = gamma_file_name(self.config.epsilon, N, self.config.precision)
        text = self.store.cached_text(key)
        if text is not None:
            self.logger.info(f"Cache hit for {name} ({key[:12]})")
            return self.store.write_text(name, text), True
        self.stage = "fh_moments"
        mom = fh_moments(FHWeightSpec(self.config.epsilon), N + MOMENT_SLACK)
        self.stage = "extract"
        self.logger.info(f"Extracting {N} coefficients at epsilon={self.config.epsilon} ({self.config.precision.value})...")
        result = extract(mom, N, self.config.precision, epsilon=self.config.epsilon)
        text = json_text({"metadata": self.store.metadata(subset), **result.to_dict()})
        self.store.store_cache(key, text)
        return self.store.write_text(name, text), False

    def load_alpha(self, N: int) -> VerblunskyScheme:
        path = self.store.find_gamma(self.config.epsilon, N, self.config.precision)
        if path is None:
            path, _ = self.extract_gamma(N)
        else:
            self.logger.info(f"Using extracted scheme {path}")
        with open(path) as fh:
            return ExtractionResult.from_dict(json.load(fh)).scheme[:N]


class ExtractHandler(CommandHandler):
    name = "extract"

    def run(self) -> CommandResult:
        path, _ = self.extract_gamma(self.config.extract_count)
        return CommandResult(success=True, files=[str(path)])


class ConstructHandler(CommandHandler):
    name = "construct"

    def run(self) -> CommandResult:
        cfg = self.config
        n = cfg.n
        alpha = self.load_alpha(n)
        self.stage = "build_scheme"
        scheme = build_scheme(alpha, n, cfg.epsilon)
        self.stage = "steklov_weight"
        result = steklov_weight(scheme, alpha, cfg.m)
        self.stage = "write"
        subset = {"artifact": "construct", "epsilon": cfg.epsilon, "n": n, "m": cfg.m, "precision": cfg.precision.value}
        tag = f"eps{eps_tag(cfg.epsilon)}_n{n}"
        weight_path = self.store.path(f"steklov_weight_{tag}_m{cfg.m}.csv")
        self.store.out_dir.mkdir(parents=True, exist_ok=True)
        write_grid_csv(result.weight, weight_path, self.store.csv_metadata(subset))
        scheme_path = self.store.write_json(
            f"steklov_scheme_{tag}.json", {"metadata": self.store.metadata(subset), **scheme.to_dict()}
        )
        polys_path = self.store.write_json(
            f"steklov_polys_{tag}.json", {"metadata": self.store.metadata(subset), **szego_forward(scheme.head).to_dict()}
        )
        report_path = self.store.write_json(
            f"construct_report_{tag}_m{cfg.m}.json", {"metadata": self.store.metadata(subset), **result.report()}
        )
        passed = result.steklov_min > 0
        if not passed:
            self.logger.error(f"Steklov minimum {result.steklov_min} is not positive")
        files = [str(weight_path), str(scheme_path), str(polys_path), str(report_path)]
        return CommandResult(success=passed, exit_code=0 if passed else 1, files=files)


class VerifyHandler(CommandHandler):
    name = "verify"

    def __init__(self, config: RunConfig, suite: Suite, criteria_path: Optional[Path] = None):
        super().__init__(config, criteria_path)
        self.suite = suite
        self.criteria = load_criteria(criteria_path)
        self.l4_report = None

    def run(self) -> CommandResult:
        suites = [Suite.IDENTITIES, Suite.L4, Suite.GROWTH, Suite.L1] if self.suite == Suite.ALL else [self.suite]
        runners: Dict[Suite, Callable[[], List[CriterionResult]]] = {
            Suite.IDENTITIES: self.verify_identities,
            Suite.L4: self.verify_l4,
            Suite.GROWTH: self.verify_growth,
            Suite.L1: self.verify_l1,
        }
        results: List[CriterionResult] = []
        for suite in suites:
            self.stage = f"verify {suite.value}"
            self.logger.info(f"Running suite {suite.value}...")
            suite_results = runners[suite]()
            for r in suite_results:
                r.name = f"{suite.value}.{r.name}"
            results.extend(suite_results)
        for r in results:
            level = logging.INFO if r.passed else logging.ERROR
            self.logger.log(level, f"{r.name}: value={r.value:.6g} threshold={r.threshold:.6g} passed={r.passed}")
        passed = all(r.passed for r in results)
        subset = {"artifact": "verify", "suite": self.suite.value, **self.config_subset()}
        report = VerifyReport(
            suite=self.suite.value,
            epsilon=self.config.epsilon,
            passed=passed,
            criteria=results,
            metadata=self.store.metadata(subset),
        )
        path = self.store.write_json(f"verify_{self.suite.value}.json", report.model_dump(mode="json"))
        return CommandResult(success=passed, exit_code=0 if passed else 1, files=[str(path)])

    def config_subset(self) -> Dict[str, Any]:
        cfg = self.config
        return {
            "epsilon": cfg.epsilon,
            "n_list": cfg.n_list,
            "N": cfg.N,
            "m": cfg.m,
            "precision": cfg.precision.value,
            "seed": cfg.seed,
            "exclusion_radius": cfg.exclusion_radius,
            "criteria": canonical_json(self.criteria),
        }

    def verify_identities(self) -> List[CriterionResult]:
        return identity_suite(self.config.seed, self.criteria["identities"])

    def l4_count(self) -> int:
        return self.config.N if self.config.N is not None else L4_DEFAULT_N

    def verify_l4(self) -> List[CriterionResult]:
        c = self.criteria["l4"]
        eps = self.config.epsilon
        N = self.l4_count()
        fh_length = int(self.criteria["sum_rule"]["fh_length"])
        alpha = self.load_alpha(N)
        window = (int(c["window_min"]), int(c["window_max"]))
        self.stage = "residual_report"
        report = residual_report(alpha, eps, window)
        shifted = residual_report(alpha, eps, (2 * window[0], window[1]))
        early = residual_report(alpha, eps, (window[0], window[1] // 2))
        stability = max(shifted.C_fit, early.C_fit) / min(shifted.C_fit, early.C_fit)
        j_from = int(c["modulus_from"])
        j = np.arange(j_from, N)
        modulus_excess = float(np.max(np.abs(alpha.gamma[j_from:]) * np.pi * (j + 1) / eps)) if len(j) else 0.0
        self.stage = "sum_rule"
        prods = np.cumprod(self.load_alpha(fh_length).rho)
        target = szego_product(FHWeightSpec(eps))
        sum_rule = np.abs(prods - target)
        checkpoints = [L for L in (fh_length // 8, fh_length // 4, fh_length // 2, fh_length) if L <= len(prods)]
        trend = [float(sum_rule[L - 1]) for L in checkpoints]
        self.l4_report = report
        return [
            at_most("imag_max", float(np.max(np.abs(alpha.gamma.imag))), c["imag_max"]),
            at_most("slope_fit", report.slope_fit, c["slope_max"]),
            at_most("C_fit_stability", stability, c["c_fit_stability"]),
            at_most("modulus_factor", modulus_excess, c["modulus_factor"]),
            at_most("sum_rule", trend[-1], self.criteria["sum_rule"]["fh"]),
            at_most("sum_rule_inversions", count_inversions([-t for t in trend]), 0),
        ]

    def verify_growth(self) -> List[CriterionResult]:
        c = self.criteria["growth"]
        cfg = self.config
        alpha = self.load_alpha(max(max(cfg.n_list), ROUND_TRIP_BLOCK))
        self.stage = "growth_report"
        growth = growth_report(cfg.n_list, cfg.epsilon, cfg.m, alpha=alpha)
        self.stage = "steklov_weight"
        constructions = [steklov_weight(build_scheme(alpha, n, cfg.epsilon), alpha, cfg.m) for n in [r.n for r in growth.rows]]
        self.stage = "round_trip"
        scheme = build_scheme(alpha, ROUND_TRIP_BLOCK, cfg.epsilon)
        w = steklov_weight(scheme, alpha, cfg.m).weight
        count = 3 * ROUND_TRIP_BLOCK + 1
        recovered = extract_verblunsky(generic_moments(w, count + 1), count + 1)
        round_trip = recovered.residual(scheme.full_scheme(count + 1))
        self.stage = "write"
        frame = growth.to_frame()
        subset = {"artifact": "growth", **self.config_subset()}
        write_frame_csv(
            frame,
            self.store.path(f"growth_eps{eps_tag(cfg.epsilon)}.csv"),
            self.store.csv_metadata(subset),
        )
        l4 = self.l4_report
        summary = GrowthSummary(
            epsilon=cfg.epsilon,
            n=[r.n for r in growth.rows],
            sup_phi=[r.sup_phi for r in growth.rows],
            ratio_log=[r.ratio for r in growth.rows],
            steklov_min=[r.steklov_min for r in constructions],
            l4_C_fit=l4.C_fit if l4 else None,
            l4_slope=l4.slope_fit if l4 else None,
            sup_slope=growth.sup_slope,
            duo_slope=growth.duo_slope,
            flagged=growth.flagged,
        )
        self.store.write_json(
            f"growth_report_eps{eps_tag(cfg.epsilon)}.json",
            {"metadata": self.store.metadata(subset), **summary.model_dump(mode="json")},
        )
        # sup/ln n may fall while sup still grows like ln n; its trend is only flagged
        return [
            above("ratio_min", growth.min_ratio, c["ratio_min"]),
            above("sup_slope", summary.sup_slope, c["slope_min"]),
            above("duo_slope", summary.duo_slope, c["slope_min"]),
            at_least("bound_margin", min(r.bound_margin for r in growth.rows), c["bound_margin"]),
            at_most("integral", max(abs(r.integral - 1.0) for r in constructions), c["integral"]),
            above("steklov_min", min(r.steklov_min for r in constructions), c["steklov_min"]),
            at_most("round_trip", round_trip, c["round_trip"]),
        ]

    def verify_l1(self) -> List[CriterionResult]:
        c = self.criteria["l1"]
        cfg = self.config
        alpha = self.load_alpha(max(cfg.n_list))
        self.stage = "lemma_l1_suite"
        report = lemma_l1_suite(alpha, cfg.n_list, cfg.m, cfg.epsilon, cfg.exclusion_radius)
        # stability is judged from stability_from on, relative to the first such block
        stable = [r for r in report.rows if r.n >= c["stability_from"]] or report.rows
        spreads = [r.phi_star_spread for r in stable]
        antipodal = [r.antipodal_sup for r in stable]
        gaps = [r.szego_gap for r in report.rows]
        write_frame_csv(
            report.to_frame(),
            self.store.path(f"l1_eps{eps_tag(cfg.epsilon)}.csv"),
            self.store.csv_metadata({"artifact": "l1", **self.config_subset()}),
        )
        return [
            at_most("phi_star_spread_stability", max(spreads) / min(spreads), c["spread_stability"]),
            at_most("antipodal_stability", max(antipodal) / antipodal[0], c["antipodal_stability"]),
            at_most("quatro", max(r.quatro for r in report.rows), c["quatro"]),
            at_most("szego_gap", gaps[-1], c["szego_gap"]),
            at_most("szego_gap_increases", count_inversions([-g for g in gaps]), c["gap_increases"]),
        ]


def identity_suite(seed: int, c: Dict[str, float]) -> List[CriterionResult]:
    """Algebraic identities on random real schemes, plus rotation and round trips on random complex ones"""
    rng = np.random.default_rng(seed)
    worst: Dict[str, float] = {
        "lemma2": 0.0, "wronskian": 0.0, "idi": 0.0, "quatro": 0.0, "star_involution": 0.0, "transfer": 0.0
    }
    for _ in range(IDENTITY_SAMPLES):
        k = int(rng.integers(1, 33))
        alpha = VerblunskyScheme(rng.uniform(-0.5, 0.5, k))
        ps = szego_forward(alpha)
        # relative to the coefficient scale of the products involved
        scale = max(1.0, float(np.max(np.abs(ps.phi.coeffs))), float(np.max(np.abs(ps.psi.coeffs)))) ** 2
        worst["lemma2"] = max(worst["lemma2"], max(lemma2_residuals(alpha)) / scale)
        worst["wronskian"] = max(worst["wronskian"], wronskian_residual(ps) / scale)
        worst["idi"] = max(worst["idi"], max(idi_residuals(alpha).values()) / scale)
        worst["quatro"] = max(worst["quatro"], quatro_residual(ps, IDENTITY_GRID) / scale)
        worst["star_involution"] = max(worst["star_involution"], star(star(ps.phi, k), k).coeff_residual(ps.phi))
        worst["transfer"] = max(worst["transfer"], transfer_residual(double_scheme(alpha)) / scale)

    rotation = round_trip = sum_rule = 0.0
    for _ in range(ROTATION_SAMPLES):
        k = int(rng.integers(1, 17))
        s = VerblunskyScheme(rng.uniform(0.0, 0.6, k) * np.exp(2j * np.pi * rng.uniform(size=k)))
        ps = szego_forward(s)
        w = bernstein_szego_weight(ps, bernstein_szego_grid(ps, ROUND_TRIP_GRID))
        mom = generic_moments(w, k + 1)
        base = extract_verblunsky(mom, k + 1)
        round_trip = max(round_trip, base.residual(s))
        sum_rule = max(sum_rule, sum_rule_residual(w, s))
        for beta in ROTATION_ANGLES:
            rotated = extract_verblunsky(rotate_moments(mom, beta), k + 1)
            rotation = max(rotation, rotated.residual(rotate_scheme(base, beta)))
    return [at_most(name, value, c[name]) for name, value in worst.items()] + [
        at_most("rotation", rotation, c["rotation"]),
        at_most("round_trip", round_trip, c["round_trip"]),
        at_most("sum_rule_bs", sum_rule, c["sum_rule_bs"]),
    ]


class ExportHandler(CommandHandler):
    name = "export"

    def __init__(self, config: RunConfig, what: PlotKind, criteria_path: Optional[Path] = None):
        super().__init__(config, criteria_path)
        self.what = what

    def run(self) -> CommandResult:
        cfg = self.config
        self.stage = f"export {self.what.value}"
        tag = eps_tag(cfg.epsilon)
        if self.what == PlotKind.GAMMA_VS_MAIN:
            path = self.store.find_gamma(cfg.epsilon, 1, cfg.precision, largest=True)
            if path is None:
                raise ArtifactError(f"no extracted scheme for epsilon={tag} in {self.store.out_dir}", producer="extract")
            with open(path) as fh:
                gamma = ExtractionResult.from_dict(json.load(fh)).scheme.gamma
            main = l4_main_terms(len(gamma), cfg.epsilon)
            frame = pd.DataFrame({
                "j": np.arange(len(gamma)),
                "gamma_re": gamma.real,
                "main_re": main.real,
                "residual_abs": np.abs(gamma - main),
            })
        elif self.what == PlotKind.WEIGHT:
            name = f"steklov_weight_eps{tag}_n{cfg.n}_m{cfg.m}.csv"
            weight = read_grid_csv(self.store.require(name, producer="construct"))
            frame = pd.DataFrame({"theta": weight.thetas, "w": weight.real})
        else:
            name = f"growth_eps{tag}.csv"
            growth = pd.read_csv(self.store.require(name, producer="verify --suite growth"), comment="#")
            frame = pd.DataFrame({
                "n": growth["n"],
                "sup": growth["sup_phi"],
                "log_n": growth["log_n"],
                "ratio": growth["ratio"],
            })
        subset = {"artifact": f"export_{self.what.value}", "epsilon": cfg.epsilon, "n": cfg.n, "m": cfg.m}
        out = self.store.path(f"plot_{self.what.value}_eps{tag}.csv")
        write_frame_csv(frame, out, self.store.csv_metadata(subset))
        return CommandResult(success=True, files=[str(out)])


# ========== CLI ==========

def parse_n_list(raw: str) -> List[int]:
    try:
        return [int(x) for x in raw.replace(" ", "").split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--n-list expects comma-separated integers, got {raw!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--epsilon", type=float, help="jump strength in (0, 0.3] (default OPUC_EPSILON or 0.1)")
    common.add_argument("--n", type=int, help="block size of the constructed scheme")
    common.add_argument("--n-list", type=parse_n_list, help="comma-separated block sizes for the suites")
    common.add_argument("--N", type=int, dest="N", help="number of Schur parameters to extract")
    common.add_argument("--grid", type=int, dest="m", help="grid size, multiple of 4 (default OPUC_GRID or 65536)")
    common.add_argument("--precision", choices=[p.value for p in Precision], help="extraction arithmetic")
    common.add_argument("--out", type=Path, dest="out_dir", help="artifact directory")
    common.add_argument("--seed", type=int, help="seed for the random identity schemes")
    common.add_argument("--exclusion-radius", type=float, help="distance from the jumps skipped in comparisons")
    common.add_argument("--large", action="store_true", default=None, help="add n = 1024 to the suites")
    common.add_argument("--criteria", type=Path, help="override the bundled criteria.json")

    parser = argparse.ArgumentParser(
        prog="opuc-steklov",
        description="Schur parameter extraction and the Steklov counterexample construction",
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    verbs = parser.add_subparsers(dest="verb", required=True)
    verbs.add_parser("extract", parents=[common], help="extract Schur parameters of the two-arc weight")
    verbs.add_parser("construct", parents=[common], help="build the Steklov weight for --n")
    verify = verbs.add_parser(
        "verify",
        parents=[common],
        help="run verification suites",
        epilog=VERIFY_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    verify.add_argument("--suite", choices=[s.value for s in Suite], default=Suite.ALL.value)
    export = verbs.add_parser(
        "export",
        parents=[common],
        help="write plot-data CSV",
        epilog=EXPORT_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    export.add_argument("--what", choices=[k.value for k in PlotKind], required=True)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {
        key: getattr(args, key, None)
        for key in ("epsilon", "n", "n_list", "N", "m", "precision", "out_dir", "seed", "exclusion_radius", "large")
    }
    return RunConfig.from_env(**overrides)


def make_handler(args: argparse.Namespace, config: RunConfig) -> CommandHandler:
    if args.verb == "extract":
        return ExtractHandler(config, args.criteria)
    if args.verb == "construct":
        return ConstructHandler(config, args.criteria)
    if args.verb == "verify":
        return VerifyHandler(config, Suite(args.suite), args.criteria)
    return ExportHandler(config, PlotKind(args.what), args.criteria)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else os.getenv("OPUC_LOG_LEVEL", "INFO").upper()
    logging.basicConfig(level=level)
    try:
        config = config_from_args(args)
        handler = make_handler(args, config)
        with out_dir_lock(Path(config.out_dir)):
            result = handler.execute()
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return 2
    except OSError as e:
        logger.error(f"Cannot use output directory: {e}")
        return 1
    for path in result.files:
        logger.info(f"Output: {path}")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
