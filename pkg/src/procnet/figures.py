"""Parameter sets and curve generators for the reference figures.

``note`` says where each parameter set comes from when it is not
self-explanatory.  The generators return plain rows so that the CLI only
formats and writes them.
"""

from __future__ import annotations

import numpy as np

from .analytic import steady_state_error_variance, tau_upper_bound
from .model import DelayLaw, DelayModel, NetworkConfig, PreprocessingModel, ScalarSystem
from .optimize import (
    joint_optimize,
    optimal_sensor_count,
    optimal_tau_inverse_linear,
    variance_crossing,
)

FIGURES: dict[int, dict] = {
    2: {
        "title": "P(tau) and its parts f(tau) (projected filter error) and q(tau) (accumulated noise)",
        "note": "no values are given for this figure; the unstable single-sensor setting of figure 4 is reused",
        "params": {"a": 0.1, "sigma2_w": 1.0, "b": 1.0, "tau_lo": 0.02, "tau_hi": 6.0, "points": 300},
    },
    3: {
        "title": "optimal delay versus s = sigma2_w / b with the upper bound overlay",
        "note": "s is swept by scaling sigma2_w at b = 1",
        "params": {"a": 1.0, "b": 1.0, "s_lo": 0.1, "s_hi": 100.0, "points": 200},
    },
    4: {
        "title": "P(tau) without communication delay, with constant delay and with compressing delay",
        "note": "one table per sign of a; the last column rescales the delay-free curve by exp(2 a tau_c)",
        "params": {"a": [0.1, -0.1], "sigma2_w": 1.0, "b": 1.0, "tau_c": 1.0, "c": 1.0,
                   "tau_lo": 0.05, "tau_hi": 6.0, "points": 300},
    },
    5: {
        "title": "P(S) at fixed tau with and without fusion delay",
        "note": "the second curve sets tau_f = 0",
        "params": {"a": -1.0, "sigma2_w": 10.0, "b": 0.1, "tau": 0.1, "tau_c": 0.1, "tau_f": 0.02, "sensors": 10},
    },
    6: {
        "title": "P(S) for several preprocessing delays",
        "note": "one P(S) block per entry of taus, plus the joint optimum in the manifest",
        "params": {"a": -1.0, "sigma2_w": 10.0, "b": 0.1, "tau_c": 0.1, "tau_f": 0.02, "sensors": 10,
                   "taus": [0.05, 0.1, 0.15, 0.2]},
    },
}


def network_config(a, sigma2_w, b, tau_c=None, tau_f=None, sensors=1, c=None) -> NetworkConfig:
    comm = DelayLaw.none()
    if tau_c is not None:
        comm = DelayLaw.constant(tau_c)
    if c is not None:
        comm = DelayLaw.compressing(c)
    fusion = DelayLaw.constant(tau_f) if tau_f is not None else DelayLaw.none()
    return NetworkConfig(ScalarSystem(a, sigma2_w), PreprocessingModel("inverse_linear", b), DelayModel(comm, fusion), sensors)


def fig5_config(with_fusion: bool = True) -> NetworkConfig:
    p = FIGURES[5]["params"]
    return network_config(p["a"], p["sigma2_w"], p["b"], p["tau_c"], p["tau_f"] if with_fusion else 0.0, p["sensors"])


def fig6_config() -> NetworkConfig:
    p = FIGURES[6]["params"]
    return network_config(p["a"], p["sigma2_w"], p["b"], p["tau_c"], p["tau_f"], p["sensors"])


def fig4_configs(a: float) -> dict[str, NetworkConfig]:
    p = FIGURES[4]["params"]
    return {
        "no_delay": network_config(a, p["sigma2_w"], p["b"]),
        "constant_delay": network_config(a, p["sigma2_w"], p["b"], tau_c=p["tau_c"]),
        "compressing_delay": network_config(a, p["sigma2_w"], p["b"], c=p["c"]),
    }


def sensor_table_rows(config: NetworkConfig, tau: float) -> list[tuple[int, float, int]]:
    """``(S, P, is_s_opt)`` for S = 1..N."""
    res = optimal_sensor_count(config, tau)
    flagged = {res.s_opt} | ({res.tie_with} if res.tie_with is not None else set())
    return [(S, P, int(S in flagged)) for S, P in res.table]


def fusion_neglect_gap(tau: float | None = None) -> dict:
    """Relative gap between the curves with and without fusion delay.

    Reported at the optimal count and at S = N, each normalized both by the
    with-fusion variance and by the without-fusion variance.
    """
    p = FIGURES[5]["params"]
    tau = p["tau"] if tau is None else tau
    with_f, without = fig5_config(True), fig5_config(False)
    best = optimal_sensor_count(with_f, tau)
    out = {"s_opt": best.s_opt, "p_opt": best.value}
    for label, S in (("s_opt", best.s_opt), ("all", with_f.sensors)):
        pf = steady_state_error_variance(with_f, tau, S).total
        pn = steady_state_error_variance(without, tau, S).total
        out[f"gap_{label}_rel_with_fusion"] = (pf - pn) / pf
        out[f"gap_{label}_rel_without_fusion"] = (pf - pn) / pn
    return out


def figure_tables(figure: int) -> tuple[dict[str, tuple[list[str], list[tuple]]], dict]:
    """Return ``({filename: (header, rows)}, summary)`` for one figure."""
    if figure not in FIGURES:
        raise ValueError(f"unknown figure {figure!r}; choose one of {sorted(FIGURES)}")
    p = FIGURES[figure]["params"]
    tables: dict[str, tuple[list[str], list[tuple]]] = {}
    summary: dict = {}

    if figure == 2:
        cfg = network_config(p["a"], p["sigma2_w"], p["b"])
        rows = []
        for t in np.linspace(p["tau_lo"], p["tau_hi"], p["points"]):
            v = steady_state_error_variance(cfg, float(t))
            rows.append((float(t), v.estimation_part, v.noise_part, v.total))
        tables["figure2.csv"] = (["tau", "f", "q", "total"], rows)
        opt = optimal_tau_inverse_linear(cfg.system, p["b"])
        summary = {"tau_opt": opt.tau_opt, "P_opt": opt.value}

    elif figure == 3:
        rows = []
        for s in np.geomspace(p["s_lo"], p["s_hi"], p["points"]):
            system = ScalarSystem(p["a"], float(s) * p["b"])
            opt = optimal_tau_inverse_linear(system, p["b"])
            rows.append((float(s), opt.tau_opt, tau_upper_bound(p["a"], float(s))))
        tables["figure3.csv"] = (["s", "tau_opt", "tau_upper_bound"], rows)

    elif figure == 4:
        grid = np.linspace(p["tau_lo"], p["tau_hi"], p["points"])
        for a in p["a"]:
            cfgs = fig4_configs(a)
            rows = []
            for t in grid:
                t = float(t)
                base = steady_state_error_variance(cfgs["no_delay"], t).total
                const = steady_state_error_variance(cfgs["constant_delay"], t).total
                comp = steady_state_error_variance(cfgs["compressing_delay"], t).total
                # pure rescaling of the delay-free curve by exp(2 a tau_c)
                scaled = base * float(np.exp(2 * a * p["tau_c"]))
                rows.append((t, base, const, comp, scaled))
            name = f"figure4_a{a:+g}.csv"
            tables[name] = (["tau", "no_delay", "constant_delay", "compressing_delay", "constant_delay_scaled"], rows)
            summary[name] = {
                "crossing_tau": variance_crossing(cfgs["constant_delay"], cfgs["compressing_delay"], p["tau_lo"], p["tau_hi"]),
            }

    elif figure == 5:
        rows = []
        for label, cfg in (("with_fusion", fig5_config(True)), ("without_fusion", fig5_config(False))):
            rows += [(label, S, P, flag) for S, P, flag in sensor_table_rows(cfg, p["tau"])]
        tables["figure5.csv"] = (["curve", "S", "P", "is_s_opt"], rows)
        summary = fusion_neglect_gap(p["tau"])

    elif figure == 6:
        cfg = fig6_config()
        rows = []
        for tau in p["taus"]:
            rows += [(tau, S, P, flag) for S, P, flag in sensor_table_rows(cfg, tau)]
        tables["figure6.csv"] = (["tau", "S", "P", "is_s_opt"], rows)
        joint = joint_optimize(cfg)
        summary = {"joint_s_opt": joint.s_opt, "joint_tau_opt": joint.optimum.tau_opt, "joint_P": joint.optimum.value}

    return tables, summary
