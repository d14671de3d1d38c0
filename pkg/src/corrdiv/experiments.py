"""Configuration-driven experiments that regenerate the capacity and pilot figures.

Each ``run_*`` function takes an ``ExperimentConfig`` and returns a
``ResultTable`` whose rows are self-describing (parameters, seed, and code
version). Analytic series never depend on the trial count; ``trials = 0``
yields them alone.
"""

import dataclasses
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import __version__
from .asymptotics import (
    EigenvalueProfile,
    highsnr_bounds,
    iid_highsnr,
    largeK_capacity,
)
from .capacity import SystemGeometry, db_to_linear, ergodic_sum_capacity
from .channel_models import OneRingPopulation, UnitaryEnsemble, synthesize_unitary_ensemble
from .errors import ConfigError
from .io import write_csv, write_json
from .pilot import (
    pilot_bound_largeR,
    pilot_bound_system2,
    prelog_tcd,
    q_star,
    system2_optimize,
)

SCHEMA_VERSION = "corrdiv-results/1"
ROW_FIELDS = ("experiment", "series", "x", "params", "value", "std_error", "trials", "seed", "version")

FIG2_CASES = {
    "M8K8r2": dict(M=8, K=8, G=4, r=2, profiles=((4, 4), (7, 1))),
    "M16K8r2": dict(M=16, K=8, G=4, r=2, profiles=((8, 8), (12, 4))),
    "M16K16r4": dict(M=16, K=16, G=4, r=4, profiles=((4, 4, 4, 4), (7, 5, 3, 1))),
}

_SNR_GRID = tuple(float(s) for s in range(0, 41, 5))
_MUX_GRID = tuple(range(1, 129)) + tuple(range(160, 3201, 32))

PRESETS = {
    "fig2": dict(snr_db=_SNR_GRID, options={"cases": list(FIG2_CASES)}),
    "fig3": dict(snr_db=_SNR_GRID, options={"M": 8, "K_values": [4, 32], "G": 4,
                                             "theta_deg": [-60.0, 60.0], "delta_deg": [5.0, 10.0]}),
    "fig4": dict(snr_db=(10.0,), K_grid=(4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048), trials=500,
                 options={"M_values": [4, 8], "theta_deg": [-60.0, 60.0], "delta_deg": [5.0, 20.0]}),
    "fig_mux": dict(K_grid=_MUX_GRID, trials=0, options={"Tc_values": [32, 100], "G_values": [1, 4, 8]}),
    "fig_fq": dict(snr_db=(10.0, 20.0, 30.0), trials=0,
                   options={"M": 200, "Tc": 64, "G": 10, "mu_values": [2, 5]}),
    "fig_pilot": dict(snr_db=(30.0,), K_grid=tuple(range(10, 641, 10)), trials=0,
                      options={"mu": 2, "G": 10, "Tc_values": [32, 128]}),
    "custom": dict(snr_db=_SNR_GRID),
}

DESK_SCALE = {
    "fig4": "K capped at 2048 (figure runs to 10000); 500 trials per point",
}


def _ascending(grid, name):
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError(f"{name} must be strictly ascending")


@dataclass
class ExperimentConfig:
    """Parameters of one experiment run.

    Attributes
    ----------
    experiment : str
        One of ``fig2``, ``fig3``, ``fig4``, ``fig_mux``, ``fig_fq``,
        ``fig_pilot``, ``custom``.
    snr_db : tuple of float
        SNR grid in dB (the power grid for ``fig_fq`` and ``fig_pilot``).
    K_grid : tuple of int
        User-count grid (``min(M, K)`` grid for the pilot experiments).
    trials : int
        Monte Carlo trials per point; 0 runs analytic series only.
    geometry, ensemble : dict, optional
        Used by ``custom``: ``{"M", "K", "G", "r"}`` and
        ``{"kind": "unitary", "profile": [...]}``, ``{"kind": "iid"}``, or
        ``{"kind": "one_ring", "theta_deg": [lo, hi], "delta_deg": [lo, hi]}``.
    options : dict
        Preset-specific settings; see ``PRESETS``.
    """

    experiment: str
    snr_db: tuple = ()
    K_grid: tuple = ()
    trials: int = 2000
    seed: int = 0
    out: Optional[str] = None
    geometry: Optional[dict] = None
    ensemble: Optional[dict] = None
    options: dict = field(default_factory=dict)
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in PRESETS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        self.snr_db = tuple(float(s) for s in self.snr_db)
        self.K_grid = tuple(int(k) for k in self.K_grid)
        _ascending(self.snr_db, "snr_db")
        _ascending(self.K_grid, "K_grid")
        if int(self.trials) != self.trials or self.trials < 0:
            raise ConfigError("trials must be a nonnegative integer")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @classmethod
    def preset(cls, experiment, **overrides):
        if experiment not in PRESETS:
            raise ConfigError(f"unknown experiment {experiment!r}")
        base = dict(PRESETS[experiment])
        opts = dict(base.pop("options", {}))
        opts.update(overrides.pop("options", None) or {})
        base.update(overrides)
        return cls(experiment=experiment, options=opts, **base)

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "experiment" not in data:
            raise ConfigError("config needs an 'experiment' field")
        return cls.preset(data.pop("experiment"), **data)

    @classmethod
    def from_json(cls, path):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self):
        return dataclasses.asdict(self)

    def option(self, name):
        try:
            return self.options[name]
        except KeyError:
            raise ConfigError(f"{self.experiment} needs option {name!r}") from None


@dataclass
class ResultTable:
    """Rows of one experiment plus run metadata."""

    experiment: str
    seed: int
    trials: int
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    def add(self, series, x, value, std_error=0.0, trials=0, **params):
        self.rows.append({
            "experiment": self.experiment,
            "series": series,
            "x": x,
            "params": ";".join(f"{k}={v}" for k, v in params.items()),
            "value": float(value),
            "std_error": float(std_error),
            "trials": int(trials),
            "seed": self.seed,
            "version": __version__,
        })

    def series(self, name):
        return [r for r in self.rows if r["series"] == name]

    def series_names(self):
        return list(dict.fromkeys(r["series"] for r in self.rows))

    def values(self, name):
        rows = self.series(name)
        return np.array([r["x"] for r in rows]), np.array([r["value"] for r in rows])

    def manifest(self):
        return {
            "schema_version": self.schema_version,
            "experiment": self.experiment,
            "seed": self.seed,
            "trials": self.trials,
            "version": __version__,
            "rows": len(self.rows),
            "series": self.series_names(),
            **self.metadata,
        }

    def write(self, path):
        """Write ``path`` as CSV and ``path`` with ``.json`` suffix as the manifest."""
        write_csv(path, self.rows, ROW_FIELDS)
        write_json(str(path).rsplit(".", 1)[0] + ".json", self.manifest())


def _table(config):
    meta = {"config": config.to_dict()}
    if config.experiment in DESK_SCALE:
        meta["desk_scale"] = DESK_SCALE[config.experiment]
    return ResultTable(config.experiment, config.seed, config.trials, metadata=meta)


def _simulate(table, series, geom, source, config, mode, x_values=None, **params):
    if config.trials == 0:
        return
    for snr in config.snr_db:
        est = ergodic_sum_capacity(geom, source, snr, config.trials, config.seed, mode,
                                   workers=config.workers)
        table.add(series, snr if x_values is None else x_values, est.mean_bps_hz, est.std_error,
                  est.trials, M=geom.M, K=geom.K, G=geom.G, r=geom.r, mode=mode, **params)


def run_fig2(config):
    """Sum capacity against SNR for unitary ensembles, simulated and analytic."""
    table = _table(config)
    cases = config.option("cases")
    for name in cases:
        if name not in FIG2_CASES:
            raise ConfigError(f"unknown fig2 case {name!r}; choose from {sorted(FIG2_CASES)}")
        c = FIG2_CASES[name]
        M, K, G, r = c["M"], c["K"], c["G"], c["r"]
        iid = SystemGeometry(M, K)
        for snr in config.snr_db:
            table.add(f"{name}/iid/analy", snr, iid_highsnr(M, K, db_to_linear(snr)), M=M, K=K)
        _simulate(table, f"{name}/iid/simul", iid, UnitaryEnsemble.iid(M), config, "full")
        geom = SystemGeometry(M, K, G, r)
        for prof in c["profiles"]:
            tag = "lam=" + "-".join(str(v) for v in prof)
            profile = EigenvalueProfile([prof] * G)
            for snr in config.snr_db:
                b = highsnr_bounds(geom, profile, db_to_linear(snr))
                table.add(f"{name}/{tag}/analy", snr, b.upper, M=M, K=K, G=G, r=r, regime=b.meta)
                table.add(f"{name}/{tag}/analy_lower", snr, b.lower, M=M, K=K, G=G, r=r, regime=b.meta)
            ens = synthesize_unitary_ensemble(M, G, r, prof, config.seed)
            _simulate(table, f"{name}/{tag}/simul", geom, ens, config, "per_group")
    return table


def _population(config, M):
    return OneRingPopulation.from_degrees(M, tuple(config.option("theta_deg")),
                                          tuple(config.option("delta_deg")))


def run_fig3(config):
    """Sum capacity against SNR at fixed M for i.i.d., unitary, and one-ring users."""
    table = _table(config)
    M, G = int(config.option("M")), int(config.option("G"))
    r = M // G
    for K in config.option("K_values"):
        _simulate(table, f"K={K}/iid", SystemGeometry(M, K), UnitaryEnsemble.iid(M), config, "full")
        ens = synthesize_unitary_ensemble(M, G, r, [M / r] * r, config.seed)
        _simulate(table, f"K={K}/unitary", SystemGeometry(M, K, G, r), ens, config, "per_group")
        _simulate(table, f"K={K}/non_unitary", SystemGeometry(M, K), _population(config, M), config, "full")
        if M >= K:
            for snr in config.snr_db:
                table.add(f"K={K}/iid/analy", snr, iid_highsnr(M, K, db_to_linear(snr)), M=M, K=K)
    return table


def _fig4_groups(M):
    return 2 if M <= 4 else 4


def run_fig4(config):
    """Sum capacity against the number of users at a fixed SNR."""
    table = _table(config)
    if len(config.snr_db) != 1:
        raise ConfigError("fig4 runs at a single SNR")
    snr = config.snr_db[0]
    P = float(db_to_linear(snr))
    for M in config.option("M_values"):
        G = int(config.options.get("G", _fig4_groups(M)))
        r = M // G
        ens = synthesize_unitary_ensemble(M, G, r, [M / r] * r, config.seed)
        profile = EigenvalueProfile.from_ensemble(ens)
        pop = _population(config, M)
        iid_profile = EigenvalueProfile(np.ones((1, M)))
        for K in config.K_grid:
            if config.trials:
                for series, geom, src, mode in (
                    ("iid", SystemGeometry(M, K), UnitaryEnsemble.iid(M), "full"),
                    ("unitary", SystemGeometry(M, K, G, r) if K % G == 0 else None, ens, "per_group"),
                    ("non_unitary", SystemGeometry(M, K), pop, "full"),
                ):
                    if geom is None:
                        continue
                    est = ergodic_sum_capacity(geom, src, snr, config.trials, config.seed, mode,
                                               workers=config.workers)
                    table.add(f"M={M}/{series}", K, est.mean_bps_hz, est.std_error, est.trials,
                              M=M, G=geom.G, snr_db=snr, mode=mode)
            if K % G == 0 and r < K // G:
                v = largeK_capacity(SystemGeometry(M, K, G, r), profile, P)
                table.add(f"M={M}/unitary/analy", K, v, M=M, G=G, snr_db=snr)
            if K > M:
                v = largeK_capacity(SystemGeometry(M, K), iid_profile, P)
                table.add(f"M={M}/iid/analy", K, v, M=M, G=1, snr_db=snr)
    return table


def run_fig_mux(config):
    """Pre-log factor against ``min(M, K)`` for several group counts and block lengths."""
    table = _table(config)
    for Tc in config.option("Tc_values"):
        for G in config.option("G_values"):
            for n in config.K_grid:
                res = prelog_tcd(n, n, G, Tc)
                table.add(f"Tc={Tc}/G={G}", n, res.prelog, Tc=Tc, G=G, m_star=res.m_star,
                          exact=str(Fraction(res.prelog)))
    return table


def run_fig_fq(config):
    """System II objective against the number of trained eigenmodes."""
    table = _table(config)
    M, Tc, G = int(config.option("M")), int(config.option("Tc")), int(config.option("G"))
    for mu in config.option("mu_values"):
        if M % mu or (M // mu) % G:
            raise ConfigError(f"M / mu = {M / mu} must be a multiple of G = {G}")
        geom = SystemGeometry(M, M // mu, G, Tc=Tc)
        for p_db in config.snr_db:
            res = system2_optimize(geom, float(db_to_linear(p_db)))
            name = f"mu={mu}/P={p_db:g}dB"
            for q, f in res.f_values.items():
                table.add(name, q * G, f, M=M, K=geom.K, G=G, Tc=Tc, q=q)
            table.add(name + "/argmax", res.m_p2_star, res.f_values[res.q_opt], q=res.q_opt)
            q0 = min(res.f_values)
            table.add(name + "/m_star", res.m_star, res.f_values[q0], q=q0)
    return table


def pilot_system_totals(geom, P):
    """Sum-rate bounds (bits) of pilot-aided systems I and II and the i.i.d. reference.

    Uses the flat profile. ``system2`` maximizes the system II bound over
    ``q`` in ``[q*, r]``; ``q = K'`` reproduces system I, so it never falls
    below it. ``system2_f_argmax`` evaluates the bound at the maximizer of
    the eigenmode objective instead. Both equal system I when ``q* < K'``.
    """
    profile = EigenvalueProfile.flat(geom.G, geom.r, geom.M)
    Tc = geom.Tc
    qs = q_star(geom.r, geom.K_prime, Tc)
    sys1 = qs * geom.G * pilot_bound_largeR(geom, profile, P).upper
    out = {"system1": sys1, "system2": sys1, "system2_f_argmax": sys1, "fallback": True}
    if qs >= geom.K_prime and geom.mu > 1:
        bounds = {
            q: geom.K * pilot_bound_system2(geom, profile, P, q * geom.G).upper
            for q in range(geom.K_prime + 1, geom.r + 1)
            if q < Tc
        }
        if bounds:
            out["system2"] = max(sys1, max(bounds.values()))
            q_f = system2_optimize(geom, P).q_opt
            out["system2_f_argmax"] = bounds.get(q_f, sys1)
            out["fallback"] = False
    m = min(geom.M, geom.K, Tc // 2)
    out["iid"] = m * (1 - m / Tc) * math.log2(P / math.e)
    return out


def run_fig_pilot(config):
    """Pilot-aided sum-rate bounds of systems I and II against ``min(M, K)``."""
    table = _table(config)
    mu, G = int(config.option("mu")), int(config.option("G"))
    for Tc in config.option("Tc_values"):
        for p_db in config.snr_db:
            P = float(db_to_linear(p_db))
            for K in config.K_grid:
                M = mu * K
                if K % G or M % G:
                    raise ConfigError(f"K = {K} and M = {M} must be multiples of G = {G}")
                geom = SystemGeometry(M, K, G, Tc=Tc)
                tot = pilot_system_totals(geom, P)
                tag = f"Tc={Tc}/P={p_db:g}dB"
                for series in ("system1", "system2", "system2_f_argmax", "iid"):
                    table.add(f"{tag}/{series}", K, tot[series], M=M, G=G, Tc=Tc,
                              fallback=int(tot["fallback"]))
    return table


def _custom_source(source, geom):
    kind = (source or {}).get("kind", "iid")
    if kind == "iid":
        if geom.G != 1:
            raise ConfigError("iid ensemble needs G = 1")
        return UnitaryEnsemble.iid(geom.M), "full"
    if kind == "unitary":
        prof = source.get("profile") or [geom.M / geom.r] * geom.r
        return synthesize_unitary_ensemble(geom.M, geom.G, geom.r, prof, source.get("seed", 0)), \
            source.get("mode", "per_group")
    if kind == "one_ring":
        return OneRingPopulation.from_degrees(geom.M, tuple(source.get("theta_deg", (-60, 60))),
                                              tuple(source.get("delta_deg", (5, 10)))), "full"
    raise ConfigError(f"unknown ensemble kind {kind!r}")


def run_custom(config):
    """Capacity against SNR for a geometry and ensemble given in the config."""
    if not config.geometry:
        raise ConfigError("custom experiment needs a geometry")
    try:
        geom = SystemGeometry(**config.geometry)
    except TypeError as exc:
        raise ConfigError(f"bad geometry: {exc}") from None
    source, mode = _custom_source(config.ensemble, geom)
    table = _table(config)
    _simulate(table, "custom", geom, source, config, mode)
    return table


RUNNERS = {
    "fig2": run_fig2,
    "fig3": run_fig3,
    "fig4": run_fig4,
    "fig_mux": run_fig_mux,
    "fig_fq": run_fig_fq,
    "fig_pilot": run_fig_pilot,
    "custom": run_custom,
}


def run_experiment(config):
    table = RUNNERS[config.experiment](config)
    if config.out:
        table.write(config.out)
    return table
