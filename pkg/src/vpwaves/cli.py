"""Command-line entry point: penrose, landau, bgk, simulate, norms.

Every run resolves defaults <- JSON config <- explicit flags into a RunConfig,
writes it as config.resolved.json next to the outputs and exits with 0 on
success, 2 on configuration errors and 3 on numerical failures.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy import fft as sfft

from . import __version__
from .errors import ConfigError, InvalidSpec, NumericalError
from .io import write_json

TASK_DEFAULTS = {
    "penrose": {},
    "landau": {"data": "gaussian", "k": 0.5, "t_max": 80.0, "dt": 0.05, "alpha": 0.0,
               "amplitude": 1.0, "center": 0.0, "width": 1.0, "half_width": 1.0,
               "window": None, "oracle": None},
    "bgk": {"T": 2 * math.pi, "c": 0.0, "epsilon": 1e-2, "s": 1.2, "gamma": None,
            "amplitude": None, "half_width": 0.2, "bump_v0": 2.0},
    "simulate": {"init": "equilibrium", "k": 0.5, "perturbation": 1e-3, "wave": None,
                 "dt": 0.1, "t_max": 50.0, "stride": 10, "s_values": [1.2, 1.8],
                 "v_interp": "lagrange6", "bgk": None},
    "norms": {"s": 1.2, "p": 2.0, "method": "spectral_p2"},
}


def default_v_max(profile: str, params: dict) -> float:
    """Truncation where the named profile has decayed below ~1e-15."""
    if profile == "double_gaussian":
        return float(params.get("v0", 3.0)) + 9.0
    if profile == "lorentzian":
        return 64.0
    return 8.0


@dataclass
class RunConfig:
    command: str
    profile: str = "maxwellian"
    profile_params: dict = field(default_factory=dict)
    profile_csv: str | None = None
    v_max: float | None = None  # None: per-profile default
    n_v: int = 4097
    n_x: int = 64
    task: dict = field(default_factory=dict)
    out: str = "out"
    seed: int = 0
    threads: int = 1

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise InvalidSpec(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def validate(self) -> None:
        if self.command not in TASK_DEFAULTS:
            raise InvalidSpec(f"unknown command {self.command!r}")
        if self.v_max is None:
            self.v_max = default_v_max(self.profile, self.profile_params)
        if not (self.v_max > 0 and self.n_v >= 16 and self.n_x >= 4):
            raise InvalidSpec("need v_max > 0, n_v >= 16, n_x >= 4")
        if self.threads < 1:
            raise InvalidSpec("threads must be positive")
        unknown = set(self.task) - set(TASK_DEFAULTS[self.command])
        if unknown:
            raise InvalidSpec(f"unknown task keys for {self.command}: {sorted(unknown)}")


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("run")
    g.add_argument("--config", help="JSON run configuration")
    g.add_argument("--out", help="output directory")
    g.add_argument("--threads", type=int, help="FFT worker threads")
    g.add_argument("--seed", type=int)
    g.add_argument("--profile", help="named profile (maxwellian, double_gaussian, lorentzian, weizner)")
    g.add_argument("--profile-csv", dest="profile_csv", help="profile samples v,f")
    g.add_argument("--v0", type=float, help="double_gaussian separation")
    g.add_argument("--profile-alpha", dest="profile_alpha", type=float, help="weizner shift")
    g.add_argument("--v-max", dest="v_max", type=float)
    g.add_argument("--n-v", dest="n_v", type=int)
    g.add_argument("--n-x", dest="n_x", type=int)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = argparse.ArgumentParser(prog="vpwaves", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"vpwaves {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sub.add_parser("penrose", parents=[common], help="critical period and Nyquist curve")

    p = sub.add_parser("landau", parents=[common], help="linear field from the contour formula")
    p.add_argument("--data", choices=["gaussian", "weizner", "hat"])
    p.add_argument("--k", type=float)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--alpha", type=float, help="weizner data shift")
    p.add_argument("--amplitude", type=float)
    p.add_argument("--window", type=float, nargs=2, metavar=("T_LO", "T_HI"))
    p.add_argument("--oracle", action=argparse.BooleanOptionalAction, default=None,
                   help="also run the time-domain oracle (default: gaussian data only)")

    p = sub.add_parser("bgk", parents=[common], help="construct a small BGK wave")
    p.add_argument("--T", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--s", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--amplitude", type=float, help="turning-point value beta_max")
    p.add_argument("--half-width", dest="half_width", type=float)
    p.add_argument("--bump-v0", dest="bump_v0", type=float)

    p = sub.add_parser("simulate", parents=[common], help="nonlinear Vlasov-Poisson run")
    p.add_argument("--init", choices=["equilibrium", "perturbed", "bgk"])
    p.add_argument("--k", type=float)
    p.add_argument("--perturbation", type=float)
    p.add_argument("--wave", help="BGK wave directory (init=bgk)")
    p.add_argument("--dt", type=float)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--stride", type=int)
    p.add_argument("--s-values", dest="s_values", type=float, nargs="+")
    p.add_argument("--v-interp", dest="v_interp", choices=["lagrange6", "spectral"])

    p = sub.add_parser("norms", parents=[common], help="Sobolev norms of a profile")
    p.add_argument("--s", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--method", choices=["spectral_p2", "gagliardo"])
    return ap


_GLOBAL = {"out", "threads", "seed", "profile", "profile_csv", "v_max", "n_v", "n_x"}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    base: dict = {"command": args.command}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            loaded = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise InvalidSpec(f"config is not valid JSON: {exc}") from None
        loaded.pop("command", None)
        base.update(loaded)
    cfg = RunConfig.from_dict(base)
    task = dict(TASK_DEFAULTS[cfg.command])
    task.update(cfg.task)
    ns = vars(args)
    for key in _GLOBAL:
        if ns.get(key) is not None:
            setattr(cfg, key, ns[key])
    params = dict(cfg.profile_params)
    if ns.get("v0") is not None:
        params["v0"] = ns["v0"]
    if ns.get("profile_alpha") is not None:
        params["alpha"] = ns["profile_alpha"]
    cfg.profile_params = params
    for key in TASK_DEFAULTS[cfg.command]:
        if ns.get(key) is not None:
            task[key] = list(ns[key]) if isinstance(ns[key], (list, tuple)) else ns[key]
    cfg.task = task
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def load_profile(cfg: RunConfig):
    from .profiles import VelocityGrid, named_profile, read_profile_csv

    if cfg.profile_csv:
        path = Path(cfg.profile_csv)
        if not path.is_file():
            raise ConfigError(f"profile file not found: {path}")
        return read_profile_csv(path)
    grid = VelocityGrid.symmetric(cfg.v_max, cfg.n_v)
    try:
        return named_profile(cfg.profile, grid, **cfg.profile_params)
    except TypeError as exc:
        raise InvalidSpec(f"bad parameters for profile {cfg.profile!r}: {exc}") from None


def _figure():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "vpwaves"
    fig, ax = plt.subplots(figsize=(6, 4))
    return plt, fig, ax


def _save_svg(plt, fig, path: Path) -> None:
    fig.tight_layout()
    tmp = path.with_suffix(".svg.tmp")
    fig.savefig(tmp, format="svg", metadata={"Date": None})
    tmp.replace(path)
    plt.close(fig)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_penrose(cfg: RunConfig, out: Path) -> dict:
    from .penrose import critical_period, nyquist

    prof = load_profile(cfg)
    report = critical_period(prof)
    report.to_json(out / "report.json")
    curve = nyquist(prof)
    curve.to_csv(out / "nyquist.csv")
    plt, fig, ax = _figure()
    ax.plot(curve.z.real, curve.z.imag, lw=1)
    for _, val, kind in curve.real_axis_crossings:
        ax.plot([val], [0.0], "o" if kind == "min" else "s", ms=5)
    ax.axhline(0, color="0.6", lw=0.5)
    ax.set_xlabel("Re Z")
    ax.set_ylabel("Im Z")
    ax.set_title(f"Nyquist curve, {prof.name}")
    _save_svg(plt, fig, out / "nyquist.svg")
    return report.to_dict()


def cmd_landau(cfg: RunConfig, out: Path) -> dict:
    from .landau import DATA_FACTORIES, fit_decay, landau_field, linearized_evolve

    prof = load_profile(cfg)
    t = cfg.task
    grid = prof.grid
    k = float(t["k"])
    kind = t["data"]
    if kind == "gaussian":
        data = DATA_FACTORIES[kind](grid, k, t["amplitude"], t["center"], t["width"])
    elif kind == "weizner":
        data = DATA_FACTORIES[kind](grid, k, t["alpha"], t["amplitude"])
    else:
        data = DATA_FACTORIES[kind](grid, k, t["center"], t["half_width"], t["amplitude"])
    n = int(round(t["t_max"] / t["dt"]))
    t_grid = np.arange(n + 1) * t["dt"]
    series = landau_field(prof, data, t_grid)
    series.to_csv(out / "field.csv")
    summary: dict = {"k": k, "data": kind}
    oracle = t["oracle"] if t["oracle"] is not None else kind == "gaussian"
    if oracle:
        ref = linearized_evolve(prof, data, t["dt"], n)
        ref.to_csv(out / "oracle.csv")
        scale = max(float(np.max(ref.abs)), 1e-300)
        summary["sup_rel_diff"] = float(np.max(np.abs(ref.e_k - series.e_k)) / scale)
    window = t["window"] or [min(20.0, 0.25 * t["t_max"]), t["t_max"]]
    if np.max(series.abs) == 0:
        fit = None
        write_json(out / "fit.json", {"exponent": None, "reason": "zero series"})
    else:
        try:
            fit = fit_decay(series, tuple(window))
            fit.to_json(out / "fit.json")
        except (NumericalError, ValueError) as exc:
            fit = None
            write_json(out / "fit.json", {"exponent": None, "reason": str(exc)})
    summary["fit"] = fit.to_dict() if fit else None
    plt, fig, ax = _figure()
    pos = series.t > 0
    if np.any(series.abs[pos] > 0):
        ax.loglog(series.t[pos], series.abs[pos], lw=0.8, label="contour")
        if oracle:
            ax.loglog(ref.t[pos], ref.abs[pos], lw=0.8, ls="--", label="oracle")
        if fit:
            tw = np.linspace(*fit.window, 50)
            ax.loglog(tw, fit.prefactor * tw ** (-fit.exponent), "k-", lw=1.2,
                      label=f"t^-{fit.exponent:.2f}")
        ax.legend()
    else:
        ax.plot(series.t, series.abs)
    ax.set_xlabel("t")
    ax.set_ylabel("|E_k|")
    _save_svg(plt, fig, out / "landau.svg")
    return summary


def default_amplitude(gamma: float, delta: float) -> float:
    """beta_max well inside the bump's energy scale (gamma delta)^2 / 2."""
    return 0.02 * (gamma * delta) ** 2


def build_wave(prof, task: dict, n_x: int):
    """Symmetrize about c when needed, choose gamma and amplitude, match and assemble."""
    from .bgk import assemble_bgk, energy_split, gamma_for_epsilon, match_period, verify_steady
    from .profiles import BumpFamily, symmetrize_near
    from .quadrature import SobolevSpec, weighted_distance

    T, c, hw = float(task["T"]), float(task["c"]), float(task["half_width"])
    base = prof
    try:
        split = energy_split(prof, c, hw)
    except NumericalError:
        base = symmetrize_near(prof, c, 2 * hw)
        split = energy_split(base, c, hw)
    bump = BumpFamily("positive_nu", task["bump_v0"])
    grid = prof.grid
    gamma = task["gamma"]
    clamped = False
    if gamma is None:
        gamma = gamma_for_epsilon(task["epsilon"], T, bump)
        # keep the bump width above ~8 grid cells: delta ~ 1 for these profiles
        g_min = 8 * grid.dv
        if gamma < g_min:
            gamma, clamped = g_min, True
    amp = task["amplitude"]
    if amp is None:
        amp = default_amplitude(gamma, 1.0)
    spec = match_period(base, T, amp, gamma=gamma, c=c, half_width=hw,
                        bump_v0=task["bump_v0"], split=split)
    wave = assemble_bgk(spec, base, n_x=n_x, split=split)
    vl, po = verify_steady(wave)
    dist = weighted_distance(wave.f, prof, wave.period, SobolevSpec(task["s"]))
    wave.meta.update(vlasov_residual=vl, poisson_residual=po, gamma_clamped=clamped,
                     distance_l1=dist.l1, distance_energy=dist.energy_l1, distance_wsp=dist.wsp,
                     distance_total=dist.total, epsilon=task["epsilon"], s=task["s"],
                     period_rel_error=abs(wave.period - T) / T, field_zeros=wave.field_zeros())
    return wave


def cmd_bgk(cfg: RunConfig, out: Path) -> dict:
    prof = load_profile(cfg)
    wave = build_wave(prof, cfg.task, cfg.n_x)
    wave.save(out / "wave")
    keys = ("vlasov_residual", "poisson_residual", "distance_l1", "distance_energy",
            "distance_wsp", "distance_total", "period_rel_error", "field_zeros", "gamma",
            "delta", "case", "gamma_clamped", "h2_norm")
    res = {k: wave.meta[k] for k in keys}
    res.update(T=wave.period, c=wave.speed, amplitude=wave.amplitude,
               below_epsilon=bool(wave.meta["distance_total"] < cfg.task["epsilon"]))
    write_json(out / "residuals.json", res)
    return res


def cmd_simulate(cfg: RunConfig, out: Path) -> dict:
    from .bgk import BgkWave
    from .vpsim import PhaseSpaceField, evolve

    prof = load_profile(cfg)
    t = cfg.task
    init = t["init"]
    if init == "bgk":
        if t["wave"]:
            wpath = Path(t["wave"])
            if not (wpath / "meta.json").is_file():
                raise ConfigError(f"no BGK wave at {wpath}")
            wave = BgkWave.load(wpath)
        else:
            task = dict(TASK_DEFAULTS["bgk"])
            task.update(t["bgk"] or {})
            wave = build_wave(prof, task, cfg.n_x)
        wg, pg = wave.v_grid, prof.grid
        if (wg.v_min, wg.v_max, wg.n_v) != (pg.v_min, pg.v_max, pg.n_v):
            prof = prof.resample(wave.v_grid)
        state = PhaseSpaceField.from_wave(wave)
    else:
        eps = t["perturbation"] if init == "perturbed" else 0.0
        state = PhaseSpaceField.homogeneous(prof, 2 * math.pi / t["k"], cfg.n_x, perturbation=eps)
    n = int(round(t["t_max"] / t["dt"]))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        final, diag = evolve(state, t["dt"], n, stride=t["stride"], reference=prof,
                             s_values=tuple(t["s_values"]), v_interp=t["v_interp"])
    diag.to_csv(out / "diagnostics.csv")
    final.save(out / "checkpoint")
    a = diag.arrays()
    plt, fig, ax = _figure()
    ax.semilogy(a["t"], np.maximum(a["e_l2"], 1e-300))
    ax.set_xlabel("t")
    ax.set_ylabel("||E||_2")
    _save_svg(plt, fig, out / "field.svg")
    plt, fig, ax = _figure()
    ax.plot(a["t"], a["energy"] / a["energy"][0] - 1)
    ax.set_xlabel("t")
    ax.set_ylabel("relative energy drift")
    _save_svg(plt, fig, out / "energy.svg")
    return {"steps": n, "t_final": final.t, "mass_drift": diag.relative_drift("mass"),
            "energy_drift": diag.relative_drift("energy"), "e_l2_initial": a["e_l2"][0],
            "e_l2_final": a["e_l2"][-1], "undershoot": bool(any(diag.undershoot))}


def cmd_norms(cfg: RunConfig, out: Path) -> dict:
    from .quadrature import SobolevSpec, homogeneous_seminorm_p2, lp_norm, sobolev_norm

    prof = load_profile(cfg)
    t = cfg.task
    spec = SobolevSpec(t["s"], t["p"], t["method"])
    res = {"profile": prof.name, "s": t["s"], "p": t["p"], "method": t["method"],
           "lp": lp_norm(prof.grid, prof.values, t["p"]),
           "sobolev": sobolev_norm(prof.grid, prof.values, spec),
           "mass": prof.mass, "second_moment": prof.second_moment}
    if t["p"] == 2:
        res["homogeneous_seminorm"] = homogeneous_seminorm_p2(prof.grid, prof.values, t["s"])
    write_json(out / "norms.json", res)
    return res


COMMANDS = {"penrose": cmd_penrose, "landau": cmd_landau, "bgk": cmd_bgk,
            "simulate": cmd_simulate, "norms": cmd_norms}


def run(cfg: RunConfig) -> dict:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "config.resolved.json", cfg.to_dict())
    np.random.seed(cfg.seed)
    with sfft.set_workers(cfg.threads):
        return COMMANDS[cfg.command](cfg, out)


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = resolve_config(args)
        summary = run(cfg)
    except ConfigError as exc:
        print(f"vpwaves: configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"vpwaves: numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 3
    print(json.dumps(summary, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
