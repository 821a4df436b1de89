"""Detuning sweeps and two-photon resonance conditions.

A sweep varies the QD2 detuning at fixed QD1 detuning, one independent
master-equation solve per grid point, and records the asymptotic emission
probabilities.  Points are farmed out to a process pool but results are
always merged back by grid index.
"""
import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .bath import NO_PHONONS, BathSpec, SystemParams
from .dynamics import (NEG_TOL, emission_probabilities, initial_state,
                       propagate, time_grid, time_integrated_state)
from .errors import ConfigurationError, TwoPhotonError
from .liouvillian import build_liouvillian
from .operators import build_operators, build_space

_SIDE_EPS = 1e-9


def _condition(sys, kind):
    g1, g2, d1 = sys.g1, sys.g2, sys.delta1
    if kind == "cavity":
        return lambda d2: d1 + d2 + 2 * g1**2 / d1 + 2 * g2**2 / d2
    if kind == "phonon":
        return lambda d2: d1 + 2 * g1**2 / d1 - d2 - 2 * g2**2 / d2
    raise ConfigurationError(f"unknown resonance kind {kind!r}; use 'cavity' or 'phonon'")


@dataclass(frozen=True)
class Resonance:
    kind: str
    delta2: float
    mismatch: float
    candidates: tuple = ()


def resonance_locator(sys, kind, interval=(-20.0, 20.0), n_scan=4001):
    """Locate the two-photon resonance condition of the given ``kind``.

    ``cavity``: ``D1 + D2 + 2 g1^2/D1 + 2 g2^2/D2 = 0``;
    ``phonon``: ``D1 + 2 g1^2/D1 = D2 + 2 g2^2/D2``.

    The condition is singular at ``D2 = 0``, so each side of the singularity
    is searched separately.  Sign changes are refined with Brent's method;
    without a root the minimizer of the absolute mismatch is reported.  The
    returned ``delta2`` has the smallest mismatch, ties going to the larger
    ``|D2|`` (the far-detuned branch).
    """
    if sys.delta1 == 0:
        raise ConfigurationError("resonance conditions are singular at delta1 = 0")
    lo, hi = map(float, interval)
    sides = [(s, e) for s, e in ((lo, min(hi, -_SIDE_EPS)), (max(lo, _SIDE_EPS), hi))
             if e - s > 0]
    if not sides:
        raise ConfigurationError(f"empty search interval {interval}")
    f = _condition(sys, kind)
    found = []
    for s, e in sides:
        x = np.linspace(s, e, n_scan)
        y = f(x)
        roots = [brentq(f, x[k], x[k + 1], xtol=1e-14)
                 for k in np.nonzero(np.sign(y[:-1]) * np.sign(y[1:]) <= 0)[0]]
        if roots:
            found += [(r, abs(f(r))) for r in roots]
            continue
        k = int(np.argmin(np.abs(y)))
        a, b = x[max(k - 1, 0)], x[min(k + 1, x.size - 1)]
        res = minimize_scalar(lambda d: abs(f(d)), bounds=(a, b), method="bounded",
                              options={"xatol": 1e-12})
        found.append((float(res.x), float(abs(f(res.x)))))
    found = sorted({(round(d, 10), m) for d, m in found})
    best = min(found, key=lambda dm: (round(dm[1], 9), -abs(dm[0])))
    return Resonance(kind, float(best[0]), float(best[1]), tuple(found))


@dataclass(frozen=True)
class SweepConfig:
    """Parameters of a detuning sweep.

    ``temperatures`` lists the bath temperatures in Kelvin; ``None`` runs the
    sweep with the phonon coupling switched off.  Grid points with ``|D2|``
    below ``exclude_below`` are skipped unless ``band_generator`` names the
    generator to use there.  ``method='propagate'`` integrates in time on
    ``(t_max, dt)`` and closes the tail exactly; ``'integral'`` takes the
    time integral directly from the generator.
    """

    system: SystemParams = SystemParams()
    bath: BathSpec = BathSpec()
    temperatures: tuple = (None,)
    delta2_min: float = -6.0
    delta2_max: float = 6.0
    delta2_points: int = 121
    exclude_below: float = 0.2
    band_generator: str = None
    generator: str = "full"
    method: str = "propagate"
    t_max: float = 400.0
    dt: float = 0.02
    neg_tol: float = NEG_TOL
    n_max: int = 3

    def __post_init__(self):
        if self.delta2_points < 1 or self.delta2_max < self.delta2_min:
            raise ConfigurationError("delta2 grid is empty")
        if self.generator not in ("full", "approx", "approximate"):
            raise ConfigurationError(f"unknown generator {self.generator!r}")
        if self.band_generator not in (None, "full", "approx", "approximate"):
            raise ConfigurationError(f"unknown band_generator {self.band_generator!r}")
        if self.method not in ("propagate", "integral"):
            raise ConfigurationError(f"unknown method {self.method!r}")

    def grid(self):
        d2 = np.linspace(self.delta2_min, self.delta2_max, self.delta2_points)
        if self.band_generator is None:
            d2 = d2[np.abs(d2) >= self.exclude_below - 1e-12]
        return d2

    def bath_at(self, temperature):
        return NO_PHONONS if temperature is None else self.bath.with_temperature(temperature)

    def generator_at(self, delta2):
        if abs(delta2) < self.exclude_below - 1e-12 and self.band_generator:
            return self.band_generator
        return self.generator


@dataclass
class SweepResult:
    delta2: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    R_prime: np.ndarray
    temperature: object
    config: SweepConfig
    failures: list = field(default_factory=list)

    @property
    def total(self):
        return self.P + self.Q + self.R

    def empirical_resonance(self):
        """Grid point maximizing ``R`` (NaNs from failed points ignored)."""
        return float(self.delta2[int(np.nanargmax(self.R))])

    def locators(self):
        sys = self.config.system
        out = {}
        for kind in ("cavity", "phonon"):
            try:
                res = resonance_locator(sys, kind)
                out[kind] = {"delta2": res.delta2, "mismatch": res.mismatch}
            except ConfigurationError as exc:
                out[kind] = {"error": str(exc)}
        return out

    def metadata(self):
        cfg = self.config
        return {
            "temperature_K": self.temperature,
            "phonons": self.temperature is not None,
            "system": asdict(cfg.system),
            "bath": asdict(cfg.bath_at(self.temperature)),
            "sweep": {k: v for k, v in asdict(cfg).items()
                      if k not in ("system", "bath", "temperatures")},
            "locators": self.locators(),
            "empirical_resonance_delta2": (self.empirical_resonance()
                                           if np.isfinite(self.R).any() else None),
            "failures": self.failures,
        }

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["delta2", "P", "Q", "R", "R_prime"])
            for row in zip(self.delta2, self.P, self.Q, self.R, self.R_prime):
                w.writerow([f"{x:.17g}" for x in row])

    def write(self, directory, stem):
        os.makedirs(directory, exist_ok=True)
        csv_path = os.path.join(directory, stem + ".csv")
        self.to_csv(csv_path)
        with open(os.path.join(directory, stem + ".json"), "w") as fh:
            json.dump(self.metadata(), fh, indent=2, sort_keys=True)
        return csv_path


def solve_point(sys, bath, generator="full", method="propagate", t_max=400.0,
                dt=0.02, neg_tol=NEG_TOL, n_max=3):
    """Emission probabilities ``{'P', 'Q', 'R', 'R_prime'}`` for one parameter point."""
    ops = build_operators(build_space(n_max))
    gen = build_liouvillian(generator, sys, bath, ops)
    rho0 = initial_state(ops.space)
    if method == "integral":
        x = time_integrated_state(gen, rho0)
        sp = ops.space
        pick = lambda q1, q2, n: float(x[sp.index(q1, q2, n), sp.index(q1, q2, n)].real)
        return {"P": sys.kappa * pick("g", "e", 1), "Q": sys.kappa * pick("e", "g", 1),
                "R": 2 * sys.kappa * pick("g", "g", 2),
                "R_prime": sys.kappa * pick("g", "g", 1)}
    ts = propagate(gen, rho0, time_grid(t_max, dt), neg_tol=neg_tol)
    return emission_probabilities(ts, sys.kappa).as_dict()


def _job(args):
    index, sys, bath, kwargs = args
    try:
        return index, solve_point(sys, bath, **kwargs), None
    except TwoPhotonError as exc:
        return index, None, {"index": index, "delta2": sys.delta2,
                             "error": type(exc).__name__, "message": str(exc)}


def sweep_delta2(config, workers=1):
    """Run the sweep for every temperature in ``config``.

    Returns one :class:`SweepResult` per temperature.  A failing grid point
    leaves NaNs in its row and an entry in ``failures``; the sweep goes on.
    """
    grid = config.grid()
    results = []
    for temperature in config.temperatures:
        bath = config.bath_at(temperature)
        jobs = [(k, config.system.with_delta2(d2), bath,
                 dict(generator=config.generator_at(d2), method=config.method,
                      t_max=config.t_max, dt=config.dt, neg_tol=config.neg_tol,
                      n_max=config.n_max))
                for k, d2 in enumerate(grid)]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                outcome = list(pool.map(_job, jobs))
        else:
            outcome = [_job(j) for j in jobs]
        cols = {name: np.full(grid.size, np.nan) for name in ("P", "Q", "R", "R_prime")}
        failures = []
        for index, values, failure in sorted(outcome, key=lambda o: o[0]):
            if failure is not None:
                failures.append(failure)
                continue
            for name, v in values.items():
                cols[name][index] = v
        results.append(SweepResult(grid.copy(), temperature=temperature,
                                   config=config, failures=failures, **cols))
    return results


def mirrored(config):
    """Sweep config with both detunings sign-flipped."""
    sys = replace(config.system, delta1=-config.system.delta1)
    return replace(config, system=sys, delta2_min=-config.delta2_max,
                   delta2_max=-config.delta2_min)
