"""Command-line driver: parameter sweeps written as CSV, optional SVG figures.

    qmeter <command> --config <file> [--out DIR] [--svg] [--seed N] [--threads N]

Exit status: 0 success, 2 configuration error, 3 numerical tolerance failure,
4 non-convergence of a threshold search.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import svg
from .config import COMMANDS, RunConfig, load_config, parse_coarse_graining, parse_grid, parse_number
from .errors import ConfigError, QmeterError, ToleranceError
from .measurement import coarse_grain, conditional_states, unconditional_post_state
from .metrics import hierarchy_check, report_from_channels
from .sequence import (
    ScalingModel,
    SequenceSpec,
    build_stat_table,
    cell_seed,
    find_n_star,
    fit_weak_constant,
    monte_carlo_oracle,
    scaling_predictions,
    sequence_metrics,
    single_step_work,
)
from .states import AncillaInit, MeasurementParams, QubitState
from .thermo import thermo_ledger

EXIT_OK, EXIT_CONFIG, EXIT_TOLERANCE, EXIT_NOT_CONVERGED = 0, 2, 3, 4

SINGLE_COLUMNS = ("alpha_bar", "epsilon", "xi", "eta", "eta_xr", "product", "chi_nats",
                  "w_bound_dephasing", "w_bound_dissipation", "w_dr", "w_reset_a_min", "w_reset_m_min")
ROTATION_COLUMNS = ("theta", "eta_xr")
COMPARE_COLUMNS = ("epsilon_weak", "n_star", "w_total_weak", "w_single_strong", "ratio", "converged")
THERMAL_COLUMNS = ("beta_omega", "alpha_bar", "epsilon", "xi_vacuum", "xi_thermal", "eta_vacuum", "eta_thermal",
                   "eta_xr_vacuum", "eta_xr_thermal", "w_bound_vacuum", "w_bound_thermal", "h_pn_thermal", "s_a_t0")
SEQUENCE_COLUMNS = ("epsilon", "alpha_bar", "n_steps", "xi", "eta", "eta_xr", "product", "w_total")
SEQUENCE_MC_COLUMNS = ("p_g_exact", "p_g_mc", "p_g_mc_stderr")
SCALING_COLUMNS = ("epsilon", "alpha_bar", "n_star", "converged", "w_single", "w_total", "w_total_eps2",
                   "w_weak_pred", "w_strong_pred")


@dataclass
class RunResult:
    columns: tuple
    rows: list
    svgs: dict = field(default_factory=dict)
    messages: list = field(default_factory=list)
    exit_code: int = EXIT_OK


def format_value(v) -> str:
    """Fixed CSV formatting: 12 significant digits, empty field for undefined values."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if not math.isfinite(v):
        return ""
    return f"{v + 0.0:.12g}"


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def _map(fn, items, threads: int) -> list:
    """Evaluate cells on a bounded pool; results come back in input order."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _qubit(cfg: RunConfig) -> QubitState:
    raw = cfg.get("bloch")
    if raw is None:
        return QubitState.reference()
    vals = parse_grid(raw)
    if len(vals) != 3:
        raise ConfigError("bloch needs three components x, y, z")
    try:
        return QubitState.from_bloch(*vals)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _params(cfg: RunConfig, alpha_bar, epsilon, init: AncillaInit | None = None) -> MeasurementParams:
    try:
        return MeasurementParams(
            alpha_bar=alpha_bar, epsilon=epsilon, phi=cfg.number("phi", 0.0), beta=cfg.number("beta", 1.0),
            omega_a=cfg.number("omega_a", 1.0), omega_q=cfg.number("omega_q", 0.0),
            init=init or AncillaInit.vacuum(),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _alpha_cells(cfg: RunConfig, eps_key: str = "epsilon") -> list[tuple[float, float]]:
    """(alpha_bar, epsilon) pairs; ``alpha_bar = epsilon`` ties the two."""
    eps = cfg.grid(eps_key)
    raw = cfg.get("alpha_bar", "0")
    if raw.strip() == "epsilon":
        return [(e, e) for e in eps]
    return [(a, e) for a in parse_grid(raw) for e in eps]


def _nonempty(values, name):
    if not values:
        raise ConfigError(f"grid '{name}' is empty")
    return values


# -- commands -----------------------------------------------------------------------

def run_single(cfg: RunConfig, threads: int = 1) -> RunResult:
    cg = parse_coarse_graining(cfg.get("coarse_graining", "none"))
    qubit = _qubit(cfg)
    bw = cfg.optional_number("beta_omega")
    init = AncillaInit.thermal(bw) if bw else None
    cells = _nonempty(_alpha_cells(cfg), "epsilon")
    check = cfg.flag("check_hierarchy", False)

    def cell(ae):
        a, e = ae
        p = _params(cfg, a, e, init)
        fine = conditional_states(p, qubit)
        coarse = coarse_grain(fine, cg) if cg is not None else None
        rep = report_from_channels(unconditional_post_state(p, qubit), fine, coarse)
        led = thermo_ledger(p, qubit, cg, fine=fine)
        row = (a, e, rep.xi, rep.eta, rep.eta_xr, rep.product, rep.chi, led.w_bound_dephasing,
               led.w_bound_dissipation, led.w_dr, led.w_reset_a_min, led.w_reset_m_min)
        return row, hierarchy_check(rep)

    out = _map(cell, cells, threads)
    rows = [r for r, _ in out]
    res = RunResult(SINGLE_COLUMNS, rows)
    broken = [(r[0], r[1], h.broken) for r, h in out if not h.ok]
    if check and broken:
        a, e, links = broken[0]
        res.messages.append(f"hierarchy violated at alpha_bar={a:g}, epsilon={e:g}: {', '.join(links)}")
        res.exit_code = EXIT_TOLERANCE
    res.svgs = _single_figures(rows)
    return res


def _group_by_alpha(rows, col):
    groups = {}
    for r in rows:
        groups.setdefault(r[0], ([], []))
        groups[r[0]][0].append(r[1])
        groups[r[0]][1].append(r[col])
    return groups


def _single_figures(rows) -> dict:
    tied = all(r[0] == r[1] for r in rows)
    figs = {}
    if tied:
        xs = [r[1] for r in rows]
        figs["figures_of_merit"] = svg.line_chart(
            [("xi", xs, [r[2] for r in rows]), ("eta", xs, [r[3] for r in rows]),
             ("eta_xr", xs, [r[4] for r in rows])],
            "Figures of merit, alpha_bar = epsilon", "epsilon", "value")
        figs["work"] = svg.line_chart([("dephasing bound", xs, [r[7] for r in rows]),
                                       ("dissipation bound", xs, [r[8] for r in rows])],
                                      "Work bound, alpha_bar = epsilon", "epsilon", "work [kT]")
        return figs
    groups = _group_by_alpha(rows, 2)
    label = lambda a: f"alpha_bar={a:g}"
    figs["strength"] = svg.line_chart([(label(a), xs, ys) for a, (xs, ys) in groups.items()],
                                      "Strength", "epsilon", "xi")
    figs["work"] = svg.line_chart([(label(a), xs, ys) for a, (xs, ys) in _group_by_alpha(rows, 7).items()],
                                  "Work bound (dephasing)", "epsilon", "work [kT]")
    alphas = sorted(groups)
    eps = sorted({r[1] for r in rows})
    if len(alphas) > 1 and len(eps) > 1:
        lookup = {(r[0], r[1]): r for r in rows}
        for name, col in (("eta", 3), ("eta_xr", 4)):
            z = [[lookup.get((a, e), (None,) * 12)[col] for e in eps] for a in alphas]
            figs[f"{name}_map"] = svg.heatmap(eps, alphas, z, name, "epsilon", "alpha_bar")
    return figs


def run_rotation(cfg: RunConfig, threads: int = 1) -> RunResult:
    qubit = _qubit(cfg)
    a, e = cfg.number("alpha_bar", 0.0), cfg.number("epsilon", 5.0)
    thetas = _nonempty(cfg.grid("theta", "0:pi/2:pi/64"), "theta")
    p = _params(cfg, a, e)
    post = unconditional_post_state(p, qubit)

    def cell(theta):
        fine = conditional_states(p, qubit, theta=theta)
        return (theta, report_from_channels(post, fine).eta_xr)

    rows = _map(cell, thetas, threads)
    res = RunResult(ROTATION_COLUMNS, rows)
    defined = [r for r in rows if r[1] is not None]
    if defined:
        best = max(defined, key=lambda r: r[1])
        res.messages.append(f"peak theta={best[0]:.12g} eta_xr={best[1]:.12g}")
        target = cfg.optional_number("expect_peak")
        if target is not None:
            tol = cfg.number("peak_tolerance", 0.005)
            if abs(best[1] - target) > tol:
                res.messages.append(f"peak {best[1]:.6f} differs from expected {target} by more than {tol}")
                res.exit_code = EXIT_TOLERANCE
    res.svgs = {"eta_xr": svg.line_chart([("eta_xr", [r[0] for r in rows], [r[1] for r in rows])],
                                         f"Pair rotation, alpha_bar={a:g}, epsilon={e:g}", "theta", "eta_xr")}
    return res


def run_thermal(cfg: RunConfig, threads: int = 1) -> RunResult:
    qubit = _qubit(cfg)
    cg = parse_coarse_graining(cfg.get("coarse_graining", "none"))
    bws = _nonempty(cfg.grid("beta_omega", "3"), "beta_omega")
    if any(b <= 0 for b in bws):
        raise ConfigError("beta_omega values must be positive")
    cells = [(b, a, e) for b in bws for a, e in _alpha_cells(cfg)]

    def one(p):
        fine = conditional_states(p, qubit)
        coarse = coarse_grain(fine, cg) if cg is not None else None
        rep = report_from_channels(unconditional_post_state(p, qubit), fine, coarse)
        return rep, thermo_ledger(p, qubit, cg, fine=fine)

    def cell(bae):
        b, a, e = bae
        rv, lv = one(_params(cfg, a, e))
        rt, lt = one(_params(cfg, a, e, AncillaInit.thermal(b)))
        return (b, a, e, rv.xi, rt.xi, rv.eta, rt.eta, rv.eta_xr, rt.eta_xr,
                lv.w_bound_dephasing, lt.w_bound_dephasing, lt.h_pn, lt.s_a_t0)

    rows = _map(cell, cells, threads)
    res = RunResult(THERMAL_COLUMNS, rows)
    figs = {}
    for b in bws:
        sub = [r for r in rows if r[0] == b]
        series = []
        for a in sorted({r[1] for r in sub}):
            pts = [r for r in sub if r[1] == a]
            xs = [r[2] for r in pts]
            series.append((f"vacuum, alpha_bar={a:g}", xs, [r[9] for r in pts]))
            series.append((f"thermal, alpha_bar={a:g}", xs, [r[10] for r in pts]))
        figs[f"work_bw{b:g}"] = svg.line_chart(series, f"Work bound, beta*omega_a={b:g}", "epsilon", "work [kT]")
    res.svgs = figs
    return res


def run_sequence(cfg: RunConfig, threads: int = 1) -> RunResult:
    qubit = _qubit(cfg)
    eps = _nonempty(cfg.grid("epsilon"), "epsilon")
    ratios = _nonempty(cfg.grid("alpha_ratio", "1"), "alpha_ratio")
    steps = _nonempty(cfg.int_grid("n_steps"), "n_steps")
    if any(n < 1 for n in steps):
        raise ConfigError("n_steps must be positive")
    samples = int(cfg.number("monte_carlo_samples", 0))
    cells = [(i, j, k) for i in range(len(eps)) for j in range(len(ratios)) for k in range(len(steps))]

    def cell(ijk):
        i, j, k = ijk
        e, n = eps[i], steps[k]
        a = ratios[j] * e
        p = _params(cfg, a, e)
        spec = SequenceSpec(n, p, qubit=qubit)
        table = build_stat_table(spec)
        rep = sequence_metrics(spec, table)
        row = (e, a, n, rep.xi, rep.eta, rep.eta_xr, rep.product, n * single_step_work(p, qubit))
        if samples:
            mc = monte_carlo_oracle(spec, samples, cell_seed(cfg.seed, i, j, k))
            exact = table.binary_channel().probs.weights[1]
            row = row + (exact, mc.p_r[1], mc.p_r_stderr[1])
        return row

    rows = _map(cell, cells, threads)
    cols = SEQUENCE_COLUMNS + (SEQUENCE_MC_COLUMNS if samples else ())
    res = RunResult(cols, rows)
    figs = {}
    for e in eps:
        series = []
        for r0 in ratios:
            pts = [r for r in rows if r[0] == e and math.isclose(r[1], r0 * e)]
            series.append((f"alpha_bar={r0:g} epsilon", [r[2] for r in pts], [r[3] for r in pts]))
        figs[f"xi_eps{e:g}"] = svg.line_chart(series, f"Strength of the concatenated measurement, epsilon={e:g}",
                                              "N", "xi")
    res.svgs = figs
    return res


def _tied_params(cfg: RunConfig, e: float) -> MeasurementParams:
    raw = cfg.get("alpha_bar", "epsilon").strip()
    return _params(cfg, e if raw == "epsilon" else parse_number(raw), e)


def run_scaling(cfg: RunConfig, threads: int = 1) -> RunResult:
    qubit = _qubit(cfg)
    eps = _nonempty(cfg.grid("epsilon"), "epsilon")
    if any(e <= 0 for e in eps):
        raise ConfigError("epsilon values must be positive")
    thr = cfg.number("threshold", 0.999)
    k, l = int(cfg.number("k_outcomes", 2)), int(cfg.number("l_exponent", 1))

    def cell(e):
        p = _tied_params(cfg, e)
        ns = find_n_star(p, thr, qubit)
        w1 = single_step_work(p, qubit)
        return p, ns, w1

    out = _map(cell, eps, threads)
    tied = cfg.get("alpha_bar", "epsilon").strip() == "epsilon"
    model = None
    if not tied:
        model = ScalingModel.for_pointer(abs(complex(out[0][0].alpha_bar)), k_outcomes=k, l_exponent=l)
        conv = [(e, ns.n_star * w1) for e, (_, ns, w1) in zip(eps, out) if ns.converged]
        if len(conv) >= 2 and model.h0 > 0:
            c = fit_weak_constant([c[0] for c in conv], [c[1] for c in conv], model.h0)
            model = ScalingModel(model.h0, k, l, model.sigma0, c)
    rows = []
    for e, (p, ns, w1) in zip(eps, out):
        wt = ns.n_star * w1 if ns.converged else None
        if model is not None:
            w_weak, w_strong = scaling_predictions(model, e)
        else:
            w_weak, w_strong = None, scaling_predictions(ScalingModel(0.0, k, l), e)[1]
        rows.append((e, abs(complex(p.alpha_bar)), ns.n_star, ns.converged, w1, wt,
                     None if wt is None else wt * e * e, w_weak, w_strong))
    res = RunResult(SCALING_COLUMNS, rows)
    pts = [(r[0], r[5]) for r in rows if r[5] is not None and r[5] > 0]
    if len(pts) >= 2:
        slope = float(np.polyfit(np.log([q[0] for q in pts]), np.log([q[1] for q in pts]), 1)[0])
        res.messages.append(f"log-log slope of w_total vs epsilon: {slope:.6f}")
    if any(not r[3] for r in rows):
        res.messages.append("threshold not reached for some epsilon within ceil(20/epsilon^2) steps")
        res.exit_code = EXIT_NOT_CONVERGED
    series = [("total work", [r[0] for r in rows], [r[5] for r in rows])]
    if model is not None and model.weak_constant is not None:
        series.append(("c H0 / epsilon^2", [r[0] for r in rows], [r[7] for r in rows]))
    res.svgs = {"work": svg.line_chart(series, "Total work of the concatenated sequence", "epsilon", "work [kT]",
                                       logx=True, logy=True)}
    return res


def run_compare(cfg: RunConfig, threads: int = 1) -> RunResult:
    qubit = _qubit(cfg)
    eps = _nonempty(cfg.grid("epsilon_weak"), "epsilon_weak")
    if any(e <= 0 for e in eps):
        raise ConfigError("epsilon_weak values must be positive")
    e_strong = cfg.number("epsilon_strong", 1.5)
    thr = cfg.number("threshold", 0.999)
    w_strong = single_step_work(_tied_params(cfg, e_strong), qubit)

    def cell(e):
        p = _tied_params(cfg, e)
        ns = find_n_star(p, thr, qubit)
        if not ns.converged:
            return (e, None, None, w_strong, None, False)
        wt = ns.n_star * single_step_work(p, qubit)
        return (e, ns.n_star, wt, w_strong, wt / w_strong, True)

    rows = _map(cell, eps, threads)
    res = RunResult(COMPARE_COLUMNS, rows)
    if any(not r[5] for r in rows):
        res.messages.append("threshold not reached for some epsilon_weak; cells flagged with converged=0")
        res.exit_code = EXIT_NOT_CONVERGED
    xs = [r[0] for r in rows]
    res.svgs = {"work": svg.line_chart(
        [("concatenated weak", xs, [r[2] for r in rows]), ("single strong", xs, [r[3] for r in rows])],
        f"Weak sequence vs one strong measurement (epsilon={e_strong:g})", "epsilon_weak", "work [kT]",
        logx=True, logy=True)}
    return res


RUNNERS = {
    "single": run_single,
    "sequence": run_sequence,
    "rotation": run_rotation,
    "thermal": run_thermal,
    "scaling": run_scaling,
    "compare": run_compare,
}


def resolve_threads(arg: int | None) -> int:
    if arg is not None:
        n = arg
    else:
        env = os.environ.get("QMETER_THREADS", "").strip()
        if not env:
            return 1
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"QMETER_THREADS must be an integer, got {env!r}") from None
    if n < 1:
        raise ConfigError("thread count must be at least 1")
    return n


def execute(command: str, config_path, out: str | None = None, svg_out: bool = False, seed: int | None = None,
            threads: int | None = None, stdout=None) -> int:
    """Run one command end to end and write its outputs; returns the exit status."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr
    try:
        cfg = load_config(config_path, command)
        if seed is not None:
            if not 0 <= seed < 2**64:
                raise ConfigError("seed must fit in an unsigned 64-bit integer")
            cfg.seed = seed
        out_dir = Path(out) if out is not None else cfg.output_dir
        n_threads = resolve_threads(threads)
        result = RUNNERS[command](cfg, n_threads)
    except ConfigError as exc:
        print(f"qmeter: configuration error: {exc}", file=stderr)
        return EXIT_CONFIG
    except ToleranceError as exc:
        print(f"qmeter: tolerance failure: {exc}", file=stderr)
        return EXIT_TOLERANCE
    except QmeterError as exc:
        print(f"qmeter: {exc}", file=stderr)
        return EXIT_CONFIG
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"{command}.csv").write_text(csv_text(result.columns, result.rows), encoding="utf-8")
        if svg_out:
            for name, text in result.svgs.items():
                (out_dir / f"{command}_{name}.svg").write_text(text, encoding="utf-8")
    except OSError as exc:
        print(f"qmeter: cannot write output: {exc}", file=stderr)
        return EXIT_CONFIG
    for msg in result.messages:
        print(msg, file=stdout)
    return result.exit_code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qmeter", description="Nonideal qubit measurement sweeps.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="INI configuration file")
    ap.add_argument("--out", help="output directory (overrides [run] output_dir)")
    ap.add_argument("--svg", action="store_true", help="also write SVG figures")
    ap.add_argument("--seed", type=int, help="master seed (overrides [run] seed)")
    ap.add_argument("--threads", type=int, help="worker threads (default: $QMETER_THREADS or 1)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return execute(args.command, args.config, args.out, args.svg, args.seed, args.threads)


if __name__ == "__main__":
    sys.exit(main())
