"""Configuration-driven command line front end.

Subcommands cover the full pipeline: `simulate` produces target
trajectories and exact postselected references, `steer` produces shot
ensembles and sector-filtered curves, `analyze` extracts the volume-law
correction, effective fluctuations, reconstructed entropies, and the
scaling collapse, `timeevo` runs the two-initial-state comparison, and
`oracle` prints closed-form reference values. Progress goes to stderr;
data goes to CSV/JSONL files under the output directory. Exit codes:
0 success, 2 configuration error, 3 insufficient data.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import click
import numpy as np

from . import __version__
from .circuits import (
    batch_steer,
    load_targets,
    run_target,
    run_time_evolution_experiment,
    sample_realization,
    save_shots,
    save_targets,
)
from .collapse import (
    AnalysisFailedError,
    CollapseInput,
    grid_search,
    select_half_parity,
)
from .estimators import (
    FluctuationCurve,
    InsufficientDataError,
    average_over_targets,
    corrected_fluctuation,
    effective_fluctuation,
    extract_cv,
    reconstruct_entropy,
    sector_stats,
)
from .oracles import (
    lemma_checks,
    oracle_entropy,
    oracle_spectrum,
    oracle_variance,
    overhead_estimate,
    variance_of_variance,
)
from .rng import child_seed

PROGRESS = sys.stderr


class ConfigError(ValueError):
    """Invalid or missing configuration value."""


# ---------------------------------------------------------------------------
# configuration


CONFIG_TEMPLATE = """\
# u1steer experiment configuration
[run]
name = demo
seed = 20260808
out = runs/demo
threads = 1

[circuit]
# system sizes (even), measurement-rate grid, cycles and burn-in as multiples of L
sizes = 8, 12, 16
p_grid = 0.02, 0.05, 0.1, 0.145, 0.2, 0.3, 0.4, 0.5
cycles_per_l = 3
burn_in_per_l = 2
# subsystem lengths for charge statistics: auto = 2..L/2
subsystems = auto

[simulate]
n_targets = 50
# trajectory = final-cycle value per target; time (or both) = per-cycle average
averaging = time

[steer]
n_steered = 1000
unbiased = true

[analyze]
a = 0.92
cv_j = 1
p_c = 0.14
nu = 1.3
window = 0.05
x_points = 101
# collapse_quantity: postselected | sector0 | effective
collapse_quantity = postselected
# collapse_sizes: all | odd-half | even-half
collapse_sizes = all
pc_grid = 0.10, 0.20, 0.0025
nu_grid = 0.9, 1.8, 0.025
bootstrap = 1000

[timeevo]
size = 12
p = 0.0
n_configs = 200
cycles = 24
"""


@dataclass
class ExperimentConfig:
    """Parsed experiment settings; every numeric default is explicit in `init`."""

    name: str
    seed: int
    out: str
    threads: int
    sizes: list[int]
    p_grid: list[float]
    cycles_per_l: int
    burn_in_per_l: int
    subsystems: str
    n_targets: int
    averaging: str
    n_steered: int
    unbiased: bool
    a: float
    cv_j: int
    p_c: float
    nu: float
    window: float
    x_points: int
    collapse_quantity: str
    collapse_sizes: str
    pc_grid: tuple[float, float, float]
    nu_grid: tuple[float, float, float]
    bootstrap: int
    timeevo_size: int
    timeevo_p: float
    timeevo_configs: int
    timeevo_cycles: int
    raw_text: str = field(repr=False, default="")

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.raw_text.encode("utf-8")).hexdigest()[:12]

    def provenance(self) -> str:
        return f"u1steer v{__version__} | config_sha={self.config_hash} | seed={self.seed}"

    def subsystem_list(self, num_qubits: int) -> list[int]:
        if self.subsystems == "auto":
            return list(range(2, num_qubits // 2 + 1))
        sizes = [int(s) for s in self.subsystems.split()]
        return [ls for ls in sizes if ls <= num_qubits // 2]

    def cycles(self, num_qubits: int) -> int:
        return self.cycles_per_l * num_qubits

    def burn_in(self, num_qubits: int) -> int:
        return self.burn_in_per_l * num_qubits


def _get(parser: configparser.ConfigParser, section: str, key: str, cast, fallback=None):
    if not parser.has_option(section, key):
        if fallback is not None:
            return fallback
        raise ConfigError(f"[{section}] missing required key '{key}'")
    raw = parser.get(section, key)
    try:
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc


def _int_list(raw: str) -> list[int]:
    return [int(tok) for tok in raw.replace(",", " ").split()]


def _float_list(raw: str) -> list[float]:
    return [float(tok) for tok in raw.replace(",", " ").split()]


def _grid_spec(raw: str) -> tuple[float, float, float]:
    lo, hi, step = _float_list(raw)
    if step <= 0 or hi <= lo:
        raise ValueError("grid spec must be min, max, step with step > 0 and max > min")
    return lo, hi, step


def _bool(raw: str) -> bool:
    lower = raw.strip().lower()
    if lower in ("1", "true", "yes", "on"):
        return True
    if lower in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc

    cfg = ExperimentConfig(
        name=_get(parser, "run", "name", str, "experiment"),
        seed=_get(parser, "run", "seed", int),
        out=_get(parser, "run", "out", str, "runs/experiment"),
        threads=_get(parser, "run", "threads", int, 1),
        sizes=_get(parser, "circuit", "sizes", _int_list),
        p_grid=_get(parser, "circuit", "p_grid", _float_list),
        cycles_per_l=_get(parser, "circuit", "cycles_per_l", int, 3),
        burn_in_per_l=_get(parser, "circuit", "burn_in_per_l", int, 2),
        subsystems=_get(parser, "circuit", "subsystems", str, "auto"),
        n_targets=_get(parser, "simulate", "n_targets", int, 50),
        averaging=_get(parser, "simulate", "averaging", str, "time"),
        n_steered=_get(parser, "steer", "n_steered", int, 1000),
        unbiased=_get(parser, "steer", "unbiased", _bool, True),
        a=_get(parser, "analyze", "a", float, 0.92),
        cv_j=_get(parser, "analyze", "cv_j", int, 1),
        p_c=_get(parser, "analyze", "p_c", float, 0.14),
        nu=_get(parser, "analyze", "nu", float, 1.3),
        window=_get(parser, "analyze", "window", float, 0.05),
        x_points=_get(parser, "analyze", "x_points", int, 101),
        collapse_quantity=_get(parser, "analyze", "collapse_quantity", str, "postselected"),
        collapse_sizes=_get(parser, "analyze", "collapse_sizes", str, "all"),
        pc_grid=_get(parser, "analyze", "pc_grid", _grid_spec, (0.10, 0.20, 0.0025)),
        nu_grid=_get(parser, "analyze", "nu_grid", _grid_spec, (0.9, 1.8, 0.025)),
        bootstrap=_get(parser, "analyze", "bootstrap", int, 1000),
        timeevo_size=_get(parser, "timeevo", "size", int, 12),
        timeevo_p=_get(parser, "timeevo", "p", float, 0.0),
        timeevo_configs=_get(parser, "timeevo", "n_configs", int, 200),
        timeevo_cycles=_get(parser, "timeevo", "cycles", int, 24),
        raw_text=text,
    )
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    for L in cfg.sizes:
        if L % 2 != 0 or not 2 <= L <= 24:
            raise ConfigError(f"[circuit] sizes: need even L in [2, 24], got {L}")
    for p in cfg.p_grid:
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"[circuit] p_grid: rate {p} outside [0, 1]")
    if cfg.cycles_per_l <= cfg.burn_in_per_l:
        raise ConfigError("[circuit] cycles_per_l must exceed burn_in_per_l")
    if cfg.n_targets < 1:
        raise ConfigError("[simulate] n_targets must be >= 1")
    if cfg.averaging not in ("trajectory", "time", "both"):
        raise ConfigError(f"[simulate] averaging must be trajectory|time|both, got {cfg.averaging!r}")
    if cfg.n_steered < 1:
        raise ConfigError("[steer] n_steered must be >= 1")
    if cfg.collapse_quantity not in ("postselected", "sector0", "effective"):
        raise ConfigError(f"[analyze] collapse_quantity invalid: {cfg.collapse_quantity!r}")
    if cfg.collapse_sizes not in ("all", "odd-half", "even-half"):
        raise ConfigError(f"[analyze] collapse_sizes invalid: {cfg.collapse_sizes!r}")
    if cfg.threads < 1:
        raise ConfigError("[run] threads must be >= 1")


def _grid_values(spec: tuple[float, float, float]) -> np.ndarray:
    lo, hi, step = spec
    count = int(round((hi - lo) / step)) + 1
    return lo + step * np.arange(count)


# ---------------------------------------------------------------------------
# file layout and CSV helpers


def _point_tag(num_qubits: int, rate: float) -> str:
    return f"L{num_qubits}_p{rate:.4f}"


def _write_csv(path: Path, columns, rows, provenance: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# {provenance}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x:.10g}"


def _read_csv(path: Path) -> list[dict[str, str]]:
    rows = []
    header = None
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
                continue
            rows.append(dict(zip(header, line.split(","))))
    return rows


def _maybe_float(text: str) -> float:
    return float(text) if text else math.nan


def _curves_rows(curves: dict[int, FluctuationCurve]):
    from .estimators import CSV_COLUMNS  # single source for the schema

    rows = []
    for L in sorted(curves):
        curve = curves[L]
        for (p, ls) in sorted(curve.cells):
            c = curve.cells[(p, ls)]
            rows.append(
                (L, p, ls, c.raw, c.sector0, c.cv, c.corrected, c.effective,
                 c.postselected, c.raw_err, c.sector0_err, c.cv_err, c.postselected_err)
            )
    return CSV_COLUMNS, rows


# ---------------------------------------------------------------------------
# pipeline stages (shared by the CLI commands and the tests)


def simulate_experiment(cfg: ExperimentConfig, out_dir: Path) -> None:
    """Generate targets and the exact postselected reference curves."""
    target_dir = out_dir / "targets"
    target_dir.mkdir(parents=True, exist_ok=True)
    curves: dict[int, FluctuationCurve] = {}
    entropy_rows = []
    for L in cfg.sizes:
        curve = curves.setdefault(L, FluctuationCurve(num_qubits=L))
        subsystems = cfg.subsystem_list(L)
        for p in cfg.p_grid:
            print(f"[simulate] {cfg.name}: L={L} p={p:.4f}", file=PROGRESS, flush=True)
            targets = []
            per_target: dict[int, list[float]] = {ls: [] for ls in subsystems}
            svn_vals, s2_vals = [], []
            for j in range(cfg.n_targets):
                realization = sample_realization(
                    L, p, cfg.cycles(L), cfg.burn_in(L),
                    seed=child_seed(cfg.seed, "circuit", L, f"{p:.6f}", j),
                )
                record = run_target(
                    realization,
                    outcome_seed=child_seed(cfg.seed, "target", L, f"{p:.6f}", j),
                    keep_final_state=False,
                    collect_series=True,
                    series_subsystems=subsystems,
                )
                targets.append(record)
                series = record.series
                if cfg.averaging == "trajectory":
                    for ls in subsystems:
                        per_target[ls].append(float(series.variance[ls][-1]))
                    svn_vals.append(float(series.svn[-1]))
                    s2_vals.append(float(series.s2[-1]))
                else:  # time or both: average the post-burn-in cycles
                    for ls in subsystems:
                        per_target[ls].append(float(series.variance[ls].mean()))
                    svn_vals.append(float(series.svn.mean()))
                    s2_vals.append(float(series.s2.mean()))
            save_targets(target_dir / f"{_point_tag(L, p)}.jsonl", targets)
            for ls in subsystems:
                mean, err = average_over_targets(per_target[ls])
                cell = curve.cell(p, ls)
                cell.postselected = mean
                cell.postselected_err = err
            svn_mean, svn_err = average_over_targets(svn_vals)
            s2_mean, s2_err = average_over_targets(s2_vals)
            entropy_rows.append(
                (L, p, svn_mean, svn_err, s2_mean, s2_err,
                 curve.cell(p, L // 2).postselected, curve.cell(p, L // 2).postselected_err)
            )
    columns, rows = _curves_rows(curves)
    _write_csv(out_dir / "postselected.csv", columns, rows, cfg.provenance())
    _write_csv(
        out_dir / "entropy_reference.csv",
        ("L", "p", "svn", "svn_stderr", "s2", "s2_stderr", "var", "var_stderr"),
        entropy_rows,
        cfg.provenance(),
    )


def steer_experiment(cfg: ExperimentConfig, out_dir: Path) -> None:
    """Steer every stored target and aggregate sector-filtered curves.

    Targets whose steered ensemble leaves too few shots in the zero-charge
    sector (per-target charge offsets make this possible at small run
    counts) are skipped with a warning rather than aborting the campaign.
    """
    if cfg.n_steered < (2 if cfg.unbiased else 1):
        raise InsufficientDataError(
            f"n_steered = {cfg.n_steered} cannot support the "
            f"{'unbiased' if cfg.unbiased else 'biased'} sample variance"
        )
    target_dir = out_dir / "targets"
    if not target_dir.exists():
        raise InsufficientDataError(f"no target store under {out_dir}; run simulate first")
    shot_root = out_dir / "shots"
    curves: dict[int, FluctuationCurve] = {}
    for L in cfg.sizes:
        curve = curves.setdefault(L, FluctuationCurve(num_qubits=L))
        subsystems = cfg.subsystem_list(L)
        for p in cfg.p_grid:
            store = target_dir / f"{_point_tag(L, p)}.jsonl"
            if not store.exists():
                raise InsufficientDataError(f"missing target store {store}")
            targets = load_targets(store)
            print(
                f"[steer] {cfg.name}: L={L} p={p:.4f} "
                f"({len(targets)} targets x {cfg.n_steered} runs)",
                file=PROGRESS, flush=True,
            )
            raw_by_ls: dict[int, list[float]] = {ls: [] for ls in subsystems}
            sector_by_ls: dict[int, list[float]] = {ls: [] for ls in subsystems}
            shot_dir = shot_root / _point_tag(L, p)
            shot_dir.mkdir(parents=True, exist_ok=True)
            for j, target in enumerate(targets):
                shots = batch_steer(
                    target.realization,
                    target,
                    cfg.n_steered,
                    master_seed=child_seed(cfg.seed, "steer", L, f"{p:.6f}", j),
                    n_workers=cfg.threads,
                )
                save_shots(shot_dir / f"t{j:03d}.jsonl", shots)
                stats = sector_stats(shots, subsystems, unbiased=cfg.unbiased)
                zero = stats.get(0)
                if zero is None or not zero.variance:
                    print(
                        f"[steer] skipping target {j} at L={L} p={p:.4f}: its ensemble "
                        f"left fewer than 2 shots in the zero-charge sector",
                        file=PROGRESS, flush=True,
                    )
                    continue
                for ls in subsystems:
                    z_all = [s.subsystem_charge(ls) for s in shots]
                    raw_by_ls[ls].append(float(np.var(z_all, ddof=1 if cfg.unbiased else 0)))
                    sector_by_ls[ls].append(zero.variance[ls])
            if not sector_by_ls[subsystems[0]]:
                raise InsufficientDataError(
                    f"no target at L={L} p={p} produced enough zero-sector shots; "
                    f"raise n_steered"
                )
            for ls in subsystems:
                cell = curve.cell(p, ls)
                cell.raw, cell.raw_err = average_over_targets(raw_by_ls[ls])
                cell.sector0, cell.sector0_err = average_over_targets(sector_by_ls[ls])
    columns, rows = _curves_rows(curves)
    _write_csv(out_dir / "steered.csv", columns, rows, cfg.provenance())


def analyze_experiment(cfg: ExperimentConfig, out_dir: Path) -> dict:
    """Correct, blend, reconstruct, and collapse the aggregated curves."""
    steered_path = out_dir / "steered.csv"
    ps_path = out_dir / "postselected.csv"
    analysis = out_dir / "analysis"
    analysis.mkdir(parents=True, exist_ok=True)

    ps_curves = FluctuationCurve.read_csv(ps_path) if ps_path.exists() else {}
    steered = FluctuationCurve.read_csv(steered_path) if steered_path.exists() else {}
    if not steered and not ps_curves:
        raise InsufficientDataError(f"no curves found under {out_dir}; run simulate/steer first")

    entropy_ref = {}
    ref_path = out_dir / "entropy_reference.csv"
    if ref_path.exists():
        for row in _read_csv(ref_path):
            entropy_ref[(int(row["L"]), round(float(row["p"]), 10))] = _maybe_float(row["svn"])

    entropy_rows = []
    for L, curve in sorted(steered.items()):
        ps = ps_curves.get(L)
        for p in curve.rates():
            sector_values = curve.values(p, "sector0")
            try:
                cv = extract_cv(sector_values, j=cfg.cv_j)
            except (InsufficientDataError, ValueError):
                cv = math.nan
                print(f"[analyze] no c_V pair for L={L} p={p:.4f}", file=PROGRESS)
            for ls in curve.block_sizes(p):
                cell = curve.cell(p, ls)
                if ps is not None:
                    cell.postselected = ps.cell(p, ls).postselected
                    cell.postselected_err = ps.cell(p, ls).postselected_err
                cell.cv = cv
                if not math.isnan(cv) and not math.isnan(cell.sector0):
                    cell.corrected = corrected_fluctuation(cell.sector0, cv, ls)
                    cell.effective = effective_fluctuation(
                        cell.sector0, cv, ls, p, cfg.p_c, cfg.nu, L
                    )
            half = L // 2
            eff = curve.cell(p, half).effective
            if not math.isnan(eff):
                # noise can push the effective value slightly negative
                recon = reconstruct_entropy(max(eff, 0.0), cfg.a)
                entropy_rows.append(
                    (L, p, recon, entropy_ref.get((L, round(p, 10)), math.nan))
                )
    if steered:
        columns, rows = _curves_rows(steered)
        _write_csv(analysis / "effective.csv", columns, rows, cfg.provenance())
        _write_csv(
            analysis / "entropy.csv",
            ("L", "p", "svn_reconstructed", "svn_exact"),
            entropy_rows,
            cfg.provenance(),
        )

    # scaling collapse on the configured quantity at the half partition
    source = ps_curves if cfg.collapse_quantity == "postselected" else steered
    series: dict[int, np.ndarray] = {}
    rates = None
    attribute = {"postselected": "postselected", "sector0": "sector0", "effective": "effective"}[
        cfg.collapse_quantity
    ]
    for L, curve in source.items():
        values = [curve.cell(p, L // 2) for p in curve.rates()]
        y = np.array([getattr(c, attribute) for c in values])
        if np.any(np.isnan(y)):
            continue
        r = np.array(curve.rates())
        if rates is None:
            rates = r
        elif r.shape != rates.shape or not np.allclose(r, rates):
            raise InsufficientDataError("curves do not share a common rate grid")
        series[L] = y
    if cfg.collapse_sizes != "all":
        series = select_half_parity(series, cfg.collapse_sizes.split("-")[0])
    if len(series) < 2:
        raise InsufficientDataError(
            f"collapse needs >= 2 system sizes with complete {cfg.collapse_quantity} curves"
        )
    data = CollapseInput(rates=rates, curves=series, window=cfg.window,
                         label=cfg.collapse_quantity)
    result = grid_search(data, _grid_values(cfg.pc_grid), _grid_values(cfg.nu_grid),
                         n_x=cfg.x_points)
    _write_csv(
        analysis / "collapse_heatmap.csv",
        ("p_c", "nu", "C", "C_inv"),
        result.heatmap_rows(),
        cfg.provenance(),
    )
    _write_csv(
        analysis / "collapse_scatter.csv",
        ("L", "x", "y"),
        [(L, x, y) for (x, y, L) in result.scatter],
        cfg.provenance(),
    )
    optimum = {
        "p_c": result.optimum[0],
        "nu": result.optimum[1],
        "cost": result.optimum_cost,
        "quantity": cfg.collapse_quantity,
        "sizes": sorted(series),
    }
    (analysis / "optimum.json").write_text(json.dumps(optimum, indent=2) + "\n")
    print(
        f"[analyze] collapse optimum: p_c={optimum['p_c']:.4f} nu={optimum['nu']:.3f}",
        file=PROGRESS,
    )
    return optimum


def timeevo_experiment(cfg: ExperimentConfig, out_dir: Path) -> None:
    """Compare observable growth from the product start and the mirrored start."""
    L = cfg.timeevo_size
    results = {}
    for initial in ("neel", "mirrored"):
        print(f"[timeevo] {initial} start, L={L}", file=PROGRESS, flush=True)
        results[initial] = run_time_evolution_experiment(
            L, cfg.timeevo_p, initial, cfg.timeevo_configs,
            num_cycles=cfg.timeevo_cycles,
            seed=child_seed(cfg.seed, "timeevo", initial),
        )
    neel, mirrored = results["neel"], results["mirrored"]
    rows = [
        (int(t), neel.svn_mean[t], neel.svn_err[t], neel.variance_mean[t], neel.variance_err[t],
         mirrored.svn_mean[t], mirrored.svn_err[t], mirrored.variance_mean[t],
         mirrored.variance_err[t])
        for t in range(len(neel.cycles))
    ]
    _write_csv(
        out_dir / "timeevo.csv",
        ("cycle", "neel_svn", "neel_svn_stderr", "neel_var", "neel_var_stderr",
         "mirrored_svn", "mirrored_svn_stderr", "mirrored_var", "mirrored_var_stderr"),
        rows,
        cfg.provenance(),
    )


# ---------------------------------------------------------------------------
# click entry points


def _load(config_path: str | None, out: str | None, seed: int | None, threads: int | None):
    if config_path is None:
        raise ConfigError("missing --config PATH")
    cfg = load_config(config_path)
    if seed is not None:
        cfg.seed = seed
    if threads is not None:
        cfg.threads = threads
    out_dir = Path(out) if out is not None else Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    return cfg, out_dir


def _run(stage, config, out, seed, threads) -> None:
    try:
        cfg, out_dir = _load(config, out, seed, threads)
        stage(cfg, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        sys.exit(2)
    except (InsufficientDataError, AnalysisFailedError) as exc:
        print(f"insufficient data: {exc}", file=sys.stderr)
        sys.exit(3)


def _common_options(fn):
    fn = click.option("--config", "config", type=click.Path(), help="experiment config file")(fn)
    fn = click.option("--out", "out", type=click.Path(), default=None, help="output directory")(fn)
    fn = click.option("--seed", "seed", type=int, default=None, help="override the master seed")(fn)
    fn = click.option("--threads", "threads", type=int, default=None, help="worker threads")(fn)
    return fn


@click.group()
@click.version_option(version=__version__)
def main() -> None:
    """Steered-circuit experiments for charge-fluctuation phase transitions."""


@main.command("init")
@click.option("--config", "config", type=click.Path(), default="experiment.ini",
              show_default=True, help="where to write the template")
@click.option("--force", is_flag=True, help="overwrite an existing file")
def cmd_init(config: str, force: bool) -> None:
    """Write a fully-commented configuration template."""
    path = Path(config)
    if path.exists() and not force:
        print(f"config error: {path} exists (use --force to overwrite)", file=sys.stderr)
        sys.exit(2)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(CONFIG_TEMPLATE, encoding="utf-8")
    click.echo(str(path))


@main.command("simulate")
@_common_options
def cmd_simulate(config, out, seed, threads) -> None:
    """Run target trajectories and write exact postselected references."""
    _run(simulate_experiment, config, out, seed, threads)


@main.command("steer")
@_common_options
def cmd_steer(config, out, seed, threads) -> None:
    """Run steered ensembles against the stored targets."""
    _run(steer_experiment, config, out, seed, threads)


@main.command("analyze")
@_common_options
def cmd_analyze(config, out, seed, threads) -> None:
    """Extract c_V, effective fluctuations, entropies, and the collapse."""
    _run(analyze_experiment, config, out, seed, threads)


@main.command("timeevo")
@_common_options
def cmd_timeevo(config, out, seed, threads) -> None:
    """Time-evolve the product and mirrored starts and write the comparison."""
    _run(timeevo_experiment, config, out, seed, threads)


@main.group("oracle")
def cmd_oracle() -> None:
    """Closed-form reference values."""


@cmd_oracle.command("variance")
@click.option("--L", "num_qubits", type=int, required=True)
def oracle_variance_cmd(num_qubits: int) -> None:
    """Half-chain charge variance of the flat zero-charge state."""
    value = oracle_variance(num_qubits)
    frac = Fraction(num_qubits**2, 4 * (num_qubits - 1))
    click.echo(f"{frac} = {value:.10g}")


@cmd_oracle.command("entropy")
@click.option("--L", "num_qubits", type=int, required=True)
@click.option("--renyi", type=float, default=1.0, show_default=True)
def oracle_entropy_cmd(num_qubits: int, renyi: float) -> None:
    """Exact and leading-order entanglement entropy at zero measurement rate."""
    result = oracle_entropy(num_qubits, renyi)
    click.echo(f"exact = {result.exact:.10g}")
    click.echo(f"leading = {result.leading:.10g}")


@cmd_oracle.command("spectrum")
@click.option("--L", "num_qubits", type=int, required=True)
def oracle_spectrum_cmd(num_qubits: int) -> None:
    """Block eigenvalues (exact fractions) of the half-chain reduced state."""
    spectrum = oracle_spectrum(num_qubits)
    click.echo("q,dimension,eigenvalue")
    for q, dim, lam in spectrum.blocks:
        click.echo(f"{q},{dim},{lam}")


@cmd_oracle.command("overhead")
@click.option("--L", "num_qubits", type=int, required=True)
@click.option("--eps", type=float, required=True)
@click.option("--var-inf", type=float, default=None, help="asymptotic variance override")
@click.option("--c", "constant", type=float, default=1.0, show_default=True,
              help="success-fraction prefactor")
def oracle_overhead_cmd(num_qubits, eps, var_inf, constant) -> None:
    """Minimum sector-0 samples and steered runs for target accuracy."""
    est = overhead_estimate(num_qubits, eps, var_inf, constant)
    click.echo(f"n_sector0_min = {est.n_sector0_min}")
    click.echo(f"n_steered_min = {est.n_steered_min}")


@cmd_oracle.command("vov")
@click.option("--n", "n_samples", type=int, required=True)
@click.option("--var-inf", type=float, required=True)
def oracle_vov_cmd(n_samples: int, var_inf: float) -> None:
    """Sampling variance of an n-sample charge variance."""
    click.echo(f"{variance_of_variance(n_samples, var_inf):.10g}")


@cmd_oracle.command("lemmas")
@click.option("--samples", type=int, default=100_000, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
def oracle_lemmas_cmd(samples: int, seed: int) -> None:
    """Monte Carlo check of the squared-Gaussian moment lemmas."""
    report = lemma_checks(samples, seed)
    click.echo(report.format())
    if not report.passed:
        sys.exit(1)


if __name__ == "__main__":  # pragma: no cover
    main()
