"""Command-line interface: ``seqsel <command> [options]``.

Exit codes: 0 success, 2 usage/config error, 3 data error, 4 numerical
degeneracy.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .criteria import CRITERIA, build_loglik_matrix, compute_ccwaic, select_k
from .dist import RngState
from .errors import ConfigError, DomainError, SeqselError
from .gibbs import gibbs_fit, posterior_summary
from .hmm import generate_sequence, stationary_distribution
from .io import (ensure_dir, load_faithful, now_iso, read_manifest, read_observations,
                 write_csv, write_json, write_manifest)
from .simharness import (DEPENDENCE_LEVELS, HarnessConfig, aggregate_accuracy, build_scenarios,
                         run_scenarios, true_params)

log = logging.getLogger("seqsel")

FAITHFUL_KS = [2, 3, 4, 5, 6]


def _parse_k_list(text):
    if isinstance(text, (list, tuple)):
        return [int(k) for k in text]
    ks = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..")
            ks.extend(range(int(lo), int(hi) + 1))
        else:
            ks.append(int(part))
    if not ks:
        raise ConfigError("empty K list")
    return sorted(set(ks))


def fit_candidates(y, k_list, chains, iters, burnin, seed):
    """Fit every (K, chain); returns {(K, chain): (draws, report)}."""
    root = RngState(seed)
    out = {}
    for K in k_list:
        for chain in range(chains):
            draws = gibbs_fit(y, K, n_iter=iters, burn_in=burnin,
                              rng=root.derive("select", chain, K), chain_id=chain)
            out[(K, chain)] = (draws, compute_ccwaic(build_loglik_matrix(draws, y)))
    return out


def _select_outputs(y, cfg, out_dir):
    k_list = _parse_k_list(cfg["k_list"])
    if y.shape[0] < max(k_list):
        raise DomainError(f"{y.shape[0]} observations cannot support K={max(k_list)}")
    fits = fit_candidates(y, k_list, cfg["chains"], cfg["iters"], cfg["burnin"], cfg["seed"])

    entries = [{"K": K, "chain": chain, **rep.to_dict()} for (K, chain), (_, rep) in sorted(fits.items())]
    report_path = out_dir / "report.json"
    write_json(report_path, entries)

    averaged = {}
    for K in k_list:
        reps = [fits[(K, c)][1] for c in range(cfg["chains"])]
        averaged[K] = type(reps[0])(**{f: float(np.mean([getattr(r, f) for r in reps]))
                                       for f in reps[0].to_dict()})
    chosen = select_k(averaged)
    lines = [f"n = {y.shape[0]} observations; K in {k_list}; {cfg['chains']} chain(s); "
             f"{cfg['iters']} iterations, {cfg['burnin']} burn-in; seed {cfg['seed']}", ""]
    lines.append(f"{'K':>3} {'CC-WAIC':>12} {'p_CC_corr':>10} {'ESS':>9} {'WAIC':>12} {'p_WAIC':>9} {'LOO':>12}")
    for K in k_list:
        r = averaged[K]
        lines.append(f"{K:>3} {r.ccwaic:12.2f} {r.p_cc_corr:10.2f} {r.n_eff:9.2f} "
                     f"{r.waic:12.2f} {r.p_waic:9.2f} {r.loo:12.2f}")
    lines.append("")
    for crit, label in zip(CRITERIA, ("CC-WAIC", "WAIC", "LOO")):
        lines.append(f"selected K ({label}): {chosen[crit]}")
    if cfg["chains"] > 1:
        for c in range(cfg["chains"]):
            per = select_k({K: fits[(K, c)][1] for K in k_list})
            lines.append(f"chain {c}: " + ", ".join(f"{k}={v}" for k, v in per.items()))
    summary_path = out_dir / "summary.txt"
    summary_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return fits, chosen, [report_path, summary_path]


def cmd_simulate(cfg):
    out_dir = ensure_dir(cfg["out_dir"])
    params = true_params(cfg["case"], cfg["dependence"])
    states, y = generate_sequence(params, cfg["T"], RngState(cfg["seed"]).derive("simulate"))
    path = out_dir / "data.csv"
    write_csv(path, ["t", "y", "z_true"], ((t + 1, float(y[t]), int(states[t])) for t in range(cfg["T"])))
    return [path]


def cmd_fit(cfg):
    out_dir = ensure_dir(cfg["out_dir"])
    y = read_observations(cfg["data"])
    draws = gibbs_fit(y, cfg["K"], n_iter=cfg["iters"], burn_in=cfg["burnin"],
                      rng=RngState(cfg["seed"]).derive("fit", cfg["K"]))
    report = compute_ccwaic(build_loglik_matrix(draws, y))
    report_path = out_dir / "report.json"
    write_json(report_path, [{"K": cfg["K"], "chain": 0, **report.to_dict()}])
    summary = {k: v.tolist() for k, v in posterior_summary(draws).items()}
    post_path = out_dir / "posterior.json"
    write_json(post_path, {"K": cfg["K"], "S": draws.S, "posterior_mean": summary})
    return [report_path, post_path]


def cmd_select(cfg):
    out_dir = ensure_dir(cfg["out_dir"])
    y = read_observations(cfg["data"])
    _, _, paths = _select_outputs(y, cfg, out_dir)
    return paths


def cmd_faithful(cfg):
    out_dir = ensure_dir(cfg["out_dir"])
    y = load_faithful()
    fits, _, paths = _select_outputs(y, cfg, out_dir)

    counts, edges = np.histogram(y, bins=cfg["bins"])
    hist_path = out_dir / "histogram.csv"
    write_csv(hist_path, ["bin_left", "bin_right", "count"],
              ((float(edges[i]), float(edges[i + 1]), int(counts[i])) for i in range(len(counts))))

    k_plot = 2 if 2 in _parse_k_list(cfg["k_list"]) else min(_parse_k_list(cfg["k_list"]))
    post = posterior_summary(fits[(k_plot, 0)][0])
    weights = stationary_distribution(post["A"])
    if weights is None:
        weights = np.full(k_plot, 1.0 / k_plot)
    grid = np.linspace(y.min() - 10.0, y.max() + 10.0, 201)
    comps = np.array([w * np.exp(-0.5 * ((grid - m) / s) ** 2) / (s * np.sqrt(2 * np.pi))
                      for w, m, s in zip(weights, post["mu"], post["sigma"])])
    dens_path = out_dir / "density.csv"
    header = ["x"] + [f"state_{k + 1}" for k in range(k_plot)] + ["mixture"]
    write_csv(dens_path, header,
              ([float(grid[i])] + [float(c[i]) for c in comps] + [float(comps[:, i].sum())]
               for i in range(grid.size)))
    params_path = out_dir / "states.json"
    write_json(params_path, {"K": k_plot, "weights": weights, **{k: v for k, v in post.items()}})
    return paths + [hist_path, dens_path, params_path]


def _harness_config(cfg) -> HarnessConfig:
    base = HarnessConfig.from_file(cfg["config"]).to_dict() if cfg.get("config") else {}
    overrides = {
        "cases": cfg.get("case"),
        "dependence": cfg.get("dependence"),
        "lengths": cfg.get("T"),
        "candidate_ks": _parse_k_list(cfg["k_list"]) if cfg.get("k_list") else None,
        "n_replications": cfg.get("reps"),
        "n_chains": cfg.get("chains"),
        "n_iter": cfg.get("iters"),
        "burn_in": cfg.get("burnin"),
        "base_seed": cfg.get("seed"),
    }
    base.update({k: v for k, v in overrides.items() if v is not None})
    return HarnessConfig.from_mapping(base)


def cmd_reproduce_tables(cfg):
    hc = _harness_config(cfg)
    scenarios = build_scenarios(hc)
    if cfg.get("dry_run"):
        print(f"{len(scenarios)} scenario(s); {hc.n_replications} replications x {hc.n_chains} chains; "
              f"K in {list(hc.candidate_ks)}; {hc.n_iter} iterations, {hc.burn_in} burn-in; seed {hc.base_seed}")
        for sc in scenarios:
            print(f"  {sc.name}")
        return None
    out_dir = ensure_dir(cfg["out_dir"])
    table = aggregate_accuracy(run_scenarios(scenarios), scenarios)
    csv_path = out_dir / "accuracy_table.csv"
    table.to_csv(csv_path)
    txt_path = out_dir / "accuracy_table.txt"
    txt_path.write_text(table.render(), encoding="utf-8")
    return [csv_path, txt_path]


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "select": cmd_select,
    "reproduce-tables": cmd_reproduce_tables,
    "faithful": cmd_faithful,
}


def _add_gibbs_flags(p, chains=1):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--burnin", type=int, default=500)
    p.add_argument("--chains", type=int, default=chains)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqsel", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"seqsel {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a sequence from a simulation-study truth")
    p.add_argument("--case", type=int, choices=[1, 2], required=True)
    p.add_argument("--dependence", choices=DEPENDENCE_LEVELS, required=True)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="out/simulate")

    p = sub.add_parser("fit", help="run one Gibbs chain for a single K")
    p.add_argument("data")
    p.add_argument("--K", type=int, required=True)
    _add_gibbs_flags(p)
    p.add_argument("--out-dir", default="out/fit")

    p = sub.add_parser("select", help="fit candidate K values and compare criteria")
    p.add_argument("data")
    p.add_argument("--k-list", default="2,3,4,5")
    _add_gibbs_flags(p)
    p.add_argument("--out-dir", default="out/select")

    p = sub.add_parser("reproduce-tables", help="run the simulation-study accuracy grid")
    p.add_argument("--config", help="JSON or key = value file with grid settings")
    p.add_argument("--case", type=int, action="append", choices=[1, 2])
    p.add_argument("--dependence", action="append", choices=DEPENDENCE_LEVELS)
    p.add_argument("--T", type=int, action="append")
    p.add_argument("--k-list")
    p.add_argument("--reps", type=int)
    p.add_argument("--chains", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--burnin", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--dry-run", action="store_true")
    p.add_argument("--out-dir", default="out/tables")

    p = sub.add_parser("faithful", help="model selection on the bundled Old Faithful waiting times")
    p.add_argument("--k-list", default="2..6")
    _add_gibbs_flags(p)
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--out-dir", default="out/faithful")

    p = sub.add_parser("replay", help="re-run a command from its manifest.json")
    p.add_argument("manifest")
    p.add_argument("--out-dir", help="write to this directory instead of the original one")
    return parser


def run_command(command, cfg):
    """Run ``command`` with a fully resolved config and write its manifest."""
    func = COMMANDS[command]
    started = now_iso()
    outputs = func(cfg)
    if outputs is None:
        return None
    return write_manifest(cfg["out_dir"], command, cfg, cfg.get("seed"), started, outputs)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = {k: v for k, v in vars(args).items() if k not in ("command", "verbose")}
    try:
        if args.command == "replay":
            manifest = read_manifest(args.manifest)
            command, cfg = manifest["command"], dict(manifest["config"])
            if command not in COMMANDS:
                raise ConfigError(f"manifest names unknown command {command!r}")
            if args.out_dir:
                cfg["out_dir"] = args.out_dir
        else:
            command = args.command
            if "data" in cfg:
                cfg["data"] = str(Path(cfg["data"]).resolve())
        path = run_command(command, cfg)
        if path is not None:
            print(f"wrote {Path(path).parent}")
        return 0
    except SeqselError as exc:
        print(f"seqsel: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"seqsel: I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
