"""Seeded synthetic stand-ins for the fatigue-rig and pump-fleet datasets.

Renewal runs
    Each run picks a load range S and draws its life from
    Weibull(beta, eta_ref * (S_ref / S)**m).  Windows are emitted every
    180 s; the failure time is the first grid point at or after the life.
    Load range and temperature stay flat (plus bounded sensor noise) until
    crack onset, after which the load range droops and the temperature
    climbs at a load-scaled rate.

Pump fleet
    A strong subpopulation runs more than 500 days to its first failure,
    a weak one averages 357 days.  Lives after each repair shrink toward a
    short post-repair mean.  Interval ends are failures or preventive
    suspensions; band averages rise with interval progress and escalate
    before failure except for sudden failures.  Measurements are sparse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import WINDOW_INTERVAL_S, MeasurementWindow, PumpEvent, PumpHistory, RenewalRun
from .rng import make_rng

NOISE_CLIP = 1.45  # sensor noise is Gaussian clipped at this many sd

BAND_PROFILES = {
    # band: (baseline amplitude, escalation factor at end of interval)
    "0.4x": (0.9, 1.5),
    "1x": (2.5, 3.0),
    "2x": (1.6, 2.2),
    "5x": (0.7, 1.8),
}


def _default_ranges():
    return tuple(float(s) for s in range(180, 451, 10))


def _default_means():
    return tuple(float(s) for s in range(100, 301, 10))


@dataclass(frozen=True)
class RenewalSimConfig:
    n_runs: int = 12
    weibull_beta: float = 1.7522
    weibull_eta_ref: float = 8971.0
    load_range_ref: float = 300.0
    load_range_choices: tuple = field(default_factory=_default_ranges)
    load_mean_choices: tuple = field(default_factory=_default_means)
    load_life_exponent: float = 3.0
    crack_onset_fraction: float = 0.8
    min_crack_s: float = 360.0
    droop_rate: float = 0.004
    temp_rise_rate: float = 0.008
    ambient_C: float = 22.0
    load_mean_ratio: float = 0.0
    load_noise_sd: float = 0.3
    temp_noise_sd: float = 0.1
    seed: int = 0

    def __post_init__(self):
        positive = ("n_runs", "weibull_beta", "weibull_eta_ref", "load_range_ref", "load_life_exponent",
                    "droop_rate", "temp_rise_rate", "load_noise_sd", "temp_noise_sd")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.crack_onset_fraction < 1:
            raise ValueError("crack_onset_fraction must lie in (0, 1)")
        if not self.load_range_choices or min(self.load_range_choices) <= 0:
            raise ValueError("load_range_choices must be non-empty and positive")
        if not self.load_mean_choices or min(self.load_mean_choices) <= 0:
            raise ValueError("load_mean_choices must be non-empty and positive")
        if self.min_crack_s < 0:
            raise ValueError("min_crack_s must be >= 0")


@dataclass(frozen=True)
class PumpSimConfig:
    n_pumps: int = 8
    horizon_days: float = 791.0
    strong_fraction: float = 0.625
    strong_first_min_days: float = 500.0
    strong_first_excess_mean: float = 37.0
    weak_first_mean_days: float = 357.0
    weak_first_shape: float = 3.5
    later_life_mean_days: float = 135.0
    later_life_shape: float = 2.0
    repair_degradation: float = 0.15
    min_life_days: float = 15.0
    suspension_probability: float = 0.35
    sudden_failure_probability: float = 0.1
    band: str = "1x"
    band_noise_sd: float = 0.06
    band_pump_sd: float = 0.15
    band_repair_growth: float = 0.1
    band_power: float = 1.5
    measurement_gap_days: float = 60.0
    seed: int = 0

    def __post_init__(self):
        if not self.horizon_days > 0 or self.n_pumps < 1:
            raise ValueError("horizon_days and n_pumps must be positive")
        for name in ("strong_fraction", "repair_degradation", "suspension_probability", "sudden_failure_probability"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        for name in ("weak_first_mean_days", "weak_first_shape", "later_life_mean_days", "later_life_shape",
                     "min_life_days", "measurement_gap_days"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.band not in BAND_PROFILES:
            raise ValueError(f"band must be one of {sorted(BAND_PROFILES)}")


def _noise(rng: np.random.Generator, sd: float, size) -> np.ndarray:
    return sd * np.clip(rng.standard_normal(size), -NOISE_CLIP, NOISE_CLIP)


# ---------------------------------------------------------------------------
# renewal

@dataclass(frozen=True)
class RenewalTruth:
    """Latent quantities behind one simulated run (kept for calibration checks)."""

    run_id: str
    load_range_kN: float
    life_s: float
    onset_s: float


def _renewal_run(cfg: RenewalSimConfig, index: int):
    run_id = f"R{index + 1:02d}"
    rng = make_rng(cfg.seed, "renewal", run_id)
    S = float(rng.choice(np.asarray(cfg.load_range_choices, dtype=float)))
    M = float(rng.choice(np.asarray(cfg.load_mean_choices, dtype=float)))
    if cfg.load_mean_ratio > 0:
        M = cfg.load_mean_ratio * S
    eta = cfg.weibull_eta_ref * (cfg.load_range_ref / S) ** cfg.load_life_exponent
    life = eta * (-math.log(1.0 - rng.random())) ** (1.0 / cfg.weibull_beta)
    onset = max(0.0, min(cfg.crack_onset_fraction * life, life - cfg.min_crack_s))

    n = max(1, math.ceil(life / WINDOW_INTERVAL_S))
    t = np.arange(n) * WINDOW_INTERVAL_S
    crack = np.clip(t - onset, 0.0, None)
    severity = S / cfg.load_range_ref
    load_range = S - cfg.droop_rate * severity * crack
    temperature = cfg.ambient_C + cfg.temp_rise_rate * severity * crack

    load_range = np.clip(load_range + _noise(rng, cfg.load_noise_sd, n), 0.0, None)
    load_mean = M + _noise(rng, cfg.load_noise_sd, n)
    temperature = temperature + _noise(rng, cfg.temp_noise_sd, n)

    windows = tuple(
        MeasurementWindow(float(t[i]), round(float(load_mean[i]), 4), round(float(load_range[i]), 4),
                          round(float(temperature[i]), 4))
        for i in range(n)
    )
    failure = n * WINDOW_INTERVAL_S
    return RenewalRun(run_id, windows, failure), RenewalTruth(run_id, S, life, onset)


def simulate_renewal(cfg: RenewalSimConfig) -> list[RenewalRun]:
    return [_renewal_run(cfg, i)[0] for i in range(cfg.n_runs)]


def simulate_renewal_with_truth(cfg: RenewalSimConfig):
    pairs = [_renewal_run(cfg, i) for i in range(cfg.n_runs)]
    return [p[0] for p in pairs], [p[1] for p in pairs]


def reference_equivalent_failures(runs, truths, cfg: RenewalSimConfig) -> np.ndarray:
    """Failure times rescaled to the reference load range via the load-life law."""
    return np.array([
        run.failure_time_s * (truth.load_range_kN / cfg.load_range_ref) ** cfg.load_life_exponent
        for run, truth in zip(runs, truths)
    ])


# ---------------------------------------------------------------------------
# pumps

def _weibull_with_mean(rng, mean: float, shape: float) -> float:
    scale = mean / math.gamma(1.0 + 1.0 / shape)
    return scale * (-math.log(1.0 - rng.random())) ** (1.0 / shape)


def _pump_history(cfg: PumpSimConfig, index: int, strong: bool) -> PumpHistory:
    pump_id = f"P{index + 1}"
    rng = make_rng(cfg.seed, "pump", pump_id)
    base_amp, escalation = BAND_PROFILES[cfg.band]
    base = [base_amp * math.exp(cfg.band_pump_sd * rng.standard_normal()) for _ in range(2)]
    bearing_gain = (1.0, 0.7)

    if strong:
        first_mean = cfg.strong_first_min_days + cfg.strong_first_excess_mean
    else:
        first_mean = cfg.weak_first_mean_days

    events = []
    start = 0.0
    k = 0
    mean_life = first_mean
    while True:
        if k == 0:
            if strong:
                life = cfg.strong_first_min_days + rng.exponential(cfg.strong_first_excess_mean)
            else:
                life = _weibull_with_mean(rng, cfg.weak_first_mean_days, cfg.weak_first_shape)
        else:
            mean_life = cfg.later_life_mean_days + (mean_life - cfg.later_life_mean_days) * cfg.repair_degradation
            life = _weibull_with_mean(rng, mean_life, cfg.later_life_shape)
        life = max(float(round(life)), cfg.min_life_days)
        end = start + life
        suspended = rng.random() < cfg.suspension_probability
        sudden = (not suspended) and rng.random() < cfg.sudden_failure_probability
        closed = end <= cfg.horizon_days
        stop = end if closed else cfg.horizon_days

        n_meas = rng.poisson(life / cfg.measurement_gap_days)
        n_meas = max(n_meas, 1)
        lo, hi = int(start) + 1, int(stop) - (0 if not closed else 1)
        days = set()
        if hi >= lo:
            slots = hi - lo + 1
            days.update(int(d) for d in lo + rng.choice(slots, size=min(n_meas, slots), replace=False))
            if closed and suspended:
                # the reading that prompted the intervention
                days.add(max(lo, int(end) - 1 - int(rng.integers(0, 5))))
        for d in sorted(days):
            progress = (d - start) / life
            level = 1.0 + cfg.band_repair_growth * k
            rise = 0.0 if sudden else escalation * progress**cfg.band_power
            bands = [
                round(b * level * (1.0 + g * rise) * math.exp(cfg.band_noise_sd * rng.standard_normal()), 4)
                for b, g in zip(base, bearing_gain)
            ]
            events.append(PumpEvent(pump_id, float(d), "measurement", bands[0], bands[1]))
        if not closed:
            break
        events.append(PumpEvent(pump_id, end, "suspension" if suspended else "failure"))
        start = end
        k += 1
    return PumpHistory(pump_id, tuple(events))


def simulate_pumps(cfg: PumpSimConfig) -> list[PumpHistory]:
    n_strong = int(round(cfg.strong_fraction * cfg.n_pumps))
    rng = make_rng(cfg.seed, "fleet")
    strong = np.zeros(cfg.n_pumps, dtype=bool)
    strong[rng.permutation(cfg.n_pumps)[:n_strong]] = True
    return [_pump_history(cfg, i, bool(strong[i])) for i in range(cfg.n_pumps)]


def interval_lives(histories) -> tuple[list[float], list[float]]:
    """(first lives, later lives) measured between consecutive failures/suspensions."""
    first, later = [], []
    for h in histories:
        start = 0.0
        ends = [e.day for e in h.events if e.kind != "measurement"]
        for i, end in enumerate(ends):
            (first if i == 0 else later).append(end - start)
            start = end
    return first, later
