"""Monte Carlo scenario runs, baselines and parameter sweeps."""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .. import bsa, cmlp
from ..channel import ChannelRealization, FadingParams, LinkGeometry, db_to_linear, realize_channel
from ..waveform import LinkMetrics, evaluate_link
from .config import ScenarioConfig

SCHEMES = ("proposed", "unencrypted", "mrt")
AXES = {"P_S": "power_max_w", "epsilon_e": "epsilon_e", "N": "n_subcarriers"}
CSV_COLUMNS = (
    "axis_name",
    "axis_value",
    "scheme",
    "N",
    "epsilon_e",
    "mean_sinr_bob_db",
    "mean_sinr_eve_db",
    "mean_ser_eve",
    "mean_secrecy_rate",
    "stderr_secrecy_rate",
    "num_draws",
    "seed",
)
# SINR floor before converting to dB, so an all-zero allocation stays finite
SINR_FLOOR = 1e-30
AMORTIZED_STREAM = 2**31 - 1


@dataclass(frozen=True)
class Draw:
    index: int
    ch_bob: ChannelRealization
    ch_eve: ChannelRealization
    bob_distance_m: float
    eve_distance_m: float
    init_seed: np.random.SeedSequence


@dataclass(frozen=True)
class DrawOutcome:
    scheme: str
    sinr_bob_db: float
    sinr_eve_db: float
    ser_eve: float
    min_eve_ser: float
    sum_secrecy_rate: float
    converged: bool
    audit_passed: bool


@dataclass(frozen=True)
class ScenarioRow:
    """Aggregate over draws for one scheme at one axis value."""

    axis_name: str
    axis_value: float
    scheme: str
    N: int
    epsilon_e: float
    mean_sinr_bob_db: float
    stderr_sinr_bob_db: float
    mean_sinr_eve_db: float
    stderr_sinr_eve_db: float
    mean_ser_eve: float
    stderr_ser_eve: float
    mean_secrecy_rate: float
    stderr_secrecy_rate: float
    num_draws: int
    num_converged: int
    audit_passed: bool
    seed: int

    def csv_record(self) -> dict:
        return {k: getattr(self, k) for k in CSV_COLUMNS}


@dataclass
class SweepResult:
    axis_name: str
    axis_values: list
    rows: list[ScenarioRow]

    def select(self, scheme: str) -> list[ScenarioRow]:
        return [r for r in self.rows if r.scheme == scheme]


def _disk_radius(rng: np.random.Generator, radius_m: float) -> float:
    # uniform on a disk: r = R sqrt(U)
    return radius_m * math.sqrt(rng.uniform())


def draw_channels(cfg: ScenarioConfig, seq: np.random.SeedSequence, index: int = 0) -> Draw:
    """Place Bob and Eve, then realise both channels for one Monte Carlo draw."""
    geo_ss, bob_ss, eve_ss, init_ss = seq.spawn(4)
    geo_rng = np.random.default_rng(geo_ss)
    altitude = cfg.altitude_km * 1e3
    d_bob = _disk_radius(geo_rng, cfg.bob_radius_km * 1e3)
    d_eve = _disk_radius(geo_rng, cfg.eve_radius_km * 1e3)
    fading = FadingParams(cfg.rain_mu, cfg.rain_sigma, cfg.rician_k_db, cfg.num_taps)

    def link(d, noise, gain_db, ss):
        geom = LinkGeometry(
            wavelength=cfg.wavelength_m,
            horizontal_distance=d,
            altitude=altitude,
            elevation_offset=math.atan2(d, altitude),
            beamwidth_3db=math.radians(cfg.beamwidth_3db_deg),
            max_gain=float(db_to_linear(cfg.max_gain_dbi)),
        )
        return realize_channel(
            geom, fading, cfg.n_subcarriers, noise, np.random.default_rng(ss), gain_db, cfg.beam_gain_mode
        )

    return Draw(
        index=index,
        ch_bob=link(d_bob, cfg.noise_bob_w, cfg.mean_gain_bob_db, bob_ss),
        ch_eve=link(d_eve, cfg.noise_eve_w, cfg.mean_gain_eve_db, eve_ss),
        bob_distance_m=d_bob,
        eve_distance_m=d_eve,
        init_seed=init_ss,
    )


def draw_for_index(cfg: ScenarioConfig, index: int) -> Draw:
    return draw_channels(cfg, np.random.SeedSequence([cfg.seed, index]), index)


def baseline_unencrypted(cfg: ScenarioConfig, draw: Draw) -> LinkMetrics:
    """Identity coding at full per-subcarrier power, no anti-intercept constraint."""
    n = draw.ch_bob.n
    return evaluate_link(draw.ch_bob, draw.ch_eve, np.eye(n), np.full(n, cfg.power_max_w))


def mrt_coding(H, power_max: float, mode: str = "gain_proportional") -> tuple[np.ndarray, np.ndarray]:
    """Diagonal conjugate-phase coding and its per-subcarrier power.

    ``gain_proportional`` sets p_k = P_S |H_k|^2 / max_j |H_j|^2; ``uniform``
    gives every subcarrier P_S.
    """
    H = np.asarray(H, dtype=np.complex128)
    mag = np.abs(H)
    phase = np.where(mag > 0, np.conj(H) / np.where(mag > 0, mag, 1.0), 1.0)
    if mode == "uniform" or mag.max() == 0:
        p = np.full(H.size, power_max)
    else:
        p = power_max * mag**2 / np.max(mag**2)
    return np.diag(phase), p


def baseline_mrt(cfg: ScenarioConfig, draw: Draw) -> LinkMetrics:
    M, p = mrt_coding(draw.ch_bob.freq_gains, cfg.power_max_w, cfg.mrt_power)
    return evaluate_link(draw.ch_bob, draw.ch_eve, M, p)


def _db(x: float) -> float:
    return 10.0 * math.log10(max(x, SINR_FLOOR))


def _outcome(scheme: str, m: LinkMetrics, converged: bool, cfg: ScenarioConfig) -> DrawOutcome:
    return DrawOutcome(
        scheme=scheme,
        sinr_bob_db=_db(float(np.mean(m.sinr_bob))),
        sinr_eve_db=_db(float(np.mean(m.sinr_eve))),
        ser_eve=m.ser_eve,
        min_eve_ser=m.min_eve_ser,
        sum_secrecy_rate=m.sum_secrecy_rate,
        converged=converged,
        audit_passed=m.min_eve_ser >= cfg.epsilon_e - cfg.delta,
    )


def run_draw(cfg: ScenarioConfig, index: int, schemes=SCHEMES, params: cmlp.NetParams | None = None):
    """All requested schemes on draw ``index``; trains a network unless ``params`` is given."""
    draw = draw_for_index(cfg, index)
    out = []
    for scheme in schemes:
        if scheme == "proposed":
            tcfg = cfg.train_config()
            net = params
            if net is None:
                net = bsa.train(draw.ch_bob, draw.ch_eve, tcfg, seed=draw.init_seed).params
            res = bsa.infer(net, draw.ch_bob, draw.ch_eve, tcfg)
            out.append(_outcome(scheme, res.metrics, res.allocation.converged, cfg))
        elif scheme == "unencrypted":
            out.append(_outcome(scheme, baseline_unencrypted(cfg, draw), True, cfg))
        elif scheme == "mrt":
            out.append(_outcome(scheme, baseline_mrt(cfg, draw), True, cfg))
        else:
            raise ValueError(f"unknown scheme {scheme!r}")
    return out


def amortized_params(cfg: ScenarioConfig) -> cmlp.NetParams:
    """Network trained once on a reference draw outside the evaluation stream."""
    draw = draw_channels(cfg, np.random.SeedSequence([cfg.seed, AMORTIZED_STREAM]), -1)
    return bsa.train(draw.ch_bob, draw.ch_eve, cfg.train_config(), seed=draw.init_seed).params


def _run_draw_star(args):
    return run_draw(*args)


def collect_outcomes(cfg: ScenarioConfig, schemes=SCHEMES) -> list[list[DrawOutcome]]:
    """Per-draw outcomes in draw order (independent of worker count)."""
    params = amortized_params(cfg) if cfg.training_mode == "amortized" and "proposed" in schemes else None
    jobs = [(cfg, i, tuple(schemes), params) for i in range(cfg.num_draws)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(_run_draw_star, jobs, chunksize=max(1, len(jobs) // (4 * cfg.workers))))
    return [_run_draw_star(job) for job in jobs]


def _mean_stderr(values) -> tuple[float, float]:
    x = np.asarray(values, dtype=float)
    if x.size < 2:
        return float(x.mean()), 0.0
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def aggregate(
    cfg: ScenarioConfig,
    outcomes: list[DrawOutcome],
    axis_name: str = "",
    axis_value: float = float("nan"),
) -> ScenarioRow:
    scheme = outcomes[0].scheme
    sb = _mean_stderr([o.sinr_bob_db for o in outcomes])
    se = _mean_stderr([o.sinr_eve_db for o in outcomes])
    ser = _mean_stderr([o.ser_eve for o in outcomes])
    rate = _mean_stderr([o.sum_secrecy_rate for o in outcomes])
    converged = [o for o in outcomes if o.converged]
    return ScenarioRow(
        axis_name=axis_name,
        axis_value=float(axis_value),
        scheme=scheme,
        N=cfg.n_subcarriers,
        epsilon_e=cfg.epsilon_e,
        mean_sinr_bob_db=sb[0],
        stderr_sinr_bob_db=sb[1],
        mean_sinr_eve_db=se[0],
        stderr_sinr_eve_db=se[1],
        mean_ser_eve=ser[0],
        stderr_ser_eve=ser[1],
        mean_secrecy_rate=rate[0],
        stderr_secrecy_rate=rate[1],
        num_draws=len(outcomes),
        num_converged=len(converged),
        audit_passed=all(o.audit_passed for o in converged),
        seed=cfg.seed,
    )


def run_scenario(
    cfg: ScenarioConfig,
    schemes=("proposed",),
    axis_name: str = "",
    axis_value: float = float("nan"),
) -> list[ScenarioRow]:
    """One aggregate row per scheme over ``cfg.num_draws`` Monte Carlo draws."""
    per_draw = collect_outcomes(cfg, schemes)
    return [
        aggregate(cfg, [draw[j] for draw in per_draw], axis_name, axis_value)
        for j in range(len(schemes))
    ]


def sweep(cfg: ScenarioConfig, axis: str, values, schemes=SCHEMES) -> SweepResult:
    if axis not in AXES:
        raise ValueError(f"axis must be one of {tuple(AXES)}, got {axis!r}")
    values = list(values)
    if len(values) < 2:
        raise ValueError("a sweep needs at least two axis values")
    rows = []
    for v in values:
        point = cfg.replace(**{AXES[axis]: type(getattr(cfg, AXES[axis]))(v)})
        rows.extend(run_scenario(point, schemes, axis, v))
    return SweepResult(axis, values, rows)


def emit(results: SweepResult, path, fmt: str = "csv") -> Path:
    """Write sweep rows as CSV (fixed column order) or JSON (all aggregates)."""
    if not results.rows:
        raise ValueError("refusing to write empty results")
    path = Path(path)
    try:
        if fmt == "csv":
            with open(path, "w", newline="") as fh:
                writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
                writer.writeheader()
                for row in results.rows:
                    writer.writerow(row.csv_record())
        elif fmt == "json":
            doc = {
                "axis_name": results.axis_name,
                "axis_values": [float(v) for v in results.axis_values],
                "rows": [asdict(r) for r in results.rows],
            }
            path.write_text(json.dumps(doc, indent=2) + "\n")
        else:
            raise ValueError(f"unknown format {fmt!r}")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    return path


def read_csv(path) -> list[dict]:
    """Parse an emitted CSV back into typed dicts."""
    ints = {"N", "num_draws", "seed"}
    text = {"axis_name", "scheme"}
    out = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            out.append({k: (v if k in text else int(v) if k in ints else float(v)) for k, v in rec.items()})
    return out
