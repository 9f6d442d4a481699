"""Command-line entry point: ``pcgwas <subcommand> ...``.

Every subcommand writes its tables plus ``manifest.json`` into ``--out``.
Failures print one line, ``error: <kind>: <message>``, and exit nonzero.
"""

import argparse
import math
import os
import sys

import numpy as np

from . import analytic_power, assoc_tests, experiment, pca_core, stats_dist, tsv
from .errors import PcgwasError
from .scenario import parse_scenario, serialize_scenario

LOG10 = math.log(10.0)


def _neglog10(log_p):
    return -log_p / LOG10


def _float_list(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


def _int_list(text):
    return tuple(int(x) for x in text.split(",") if x.strip())


def _load_scenario(args):
    return parse_scenario(args.scenario, overrides={"seed": args.seed})


def _manifest(args, scenario=None, **params):
    if scenario is not None:
        params = {**params, "scenario": serialize_scenario(scenario)}
    return tsv.RunManifest(
        subcommand=args.command,
        parameters={**{k: v for k, v in vars(args).items() if k != "func"}, **params},
        seed=getattr(scenario, "seed", None) if scenario is not None else args.seed,
    )


def cmd_simulate(args):
    s = _load_scenario(args)
    sim = experiment.simulate_replicate(s, args.replicate)
    man = _manifest(args, s)
    pheno = os.path.join(args.out, "phenotypes.tsv")
    tsv.write_phenotypes(pheno, sim.genotype.values, sim.phenotypes)
    eff = os.path.join(args.out, "effects.tsv")
    tsv.write_tsv(eff, ["trait", "effect"],
                  [[f"Y{j + 1}", float(v)] for j, v in enumerate(sim.effects)])
    man.outputs = [pheno, eff]
    return man


def cmd_pca(args):
    _, Y, names = tsv.read_phenotypes(args.pheno)
    model = pca_core.fit_pca(Y)
    header, rows = pca_core.model_table(model, names)
    out = os.path.join(args.out, "pca_model.tsv")
    tsv.write_tsv(out, header, rows)
    man = _manifest(args)
    man.inputs, man.outputs = [args.pheno], [out]
    return man


def _genotype_columns(args, g0):
    if not args.genotypes:
        return ["genotype"], g0[:, None]
    header, G = tsv.read_numeric_tsv(args.genotypes)
    return header, G


def cmd_assoc(args):
    g0, Y, names = tsv.read_phenotypes(args.pheno)
    if args.model:
        mh, mrows = tsv.read_tsv(args.model)
        model, _ = pca_core.model_from_table(mh, mrows)
    else:
        model = pca_core.fit_pca(Y)
    scores = pca_core.project_scores(model, Y)
    k = Y.shape[1]
    K = args.tk if args.tk is not None else max(1, k // 2)
    var_names, G = _genotype_columns(args, g0)
    if G.shape[0] != Y.shape[0]:
        raise PcgwasError(f"genotype file has {G.shape[0]} rows, phenotypes have {Y.shape[0]}")
    header = (["variant"] + list(names) + [f"PC{i + 1}" for i in range(k)]
              + ["best_pc", "best_pc_index", "combined", f"tk:{K}", "manova"])
    rows = []
    for j, vname in enumerate(var_names):
        g = G[:, j]
        _, tchi = assoc_tests.wald_columns(Y, g)
        _, pchi = assoc_tests.wald_columns(scores, g)
        tlp = np.atleast_1d(stats_dist.log_pvalue_from_chisq(tchi, 1))
        plp = np.atleast_1d(stats_dist.log_pvalue_from_chisq(pchi, 1))
        best = assoc_tests.best_pc_test(scores, g)
        comb = assoc_tests.combined_pc_test(scores, g)
        tk = assoc_tests.fisher_group_test(pchi, K)
        _, _, man_lp = assoc_tests.manova_wilks(Y, g)
        rows.append([vname] + [_neglog10(v) for v in tlp] + [_neglog10(v) for v in plp]
                    + [_neglog10(best.log_p), best.index + 1, _neglog10(comb.log_p),
                       _neglog10(tk.log_p), _neglog10(man_lp)])
    out = os.path.join(args.out, "assoc.tsv")
    tsv.write_tsv(out, header, rows)
    man = _manifest(args, tk_K=K)
    man.inputs = [p for p in (args.pheno, args.model, args.genotypes) if p]
    man.outputs = [out]
    return man


def cmd_power_analytic(args):
    grid = {}
    for key in ("c", "v1", "v2", "alpha"):
        val = getattr(args, key)
        if val is not None:
            grid[key] = val
    if args.n is not None:
        grid["n"] = args.n
    if args.sign is not None:
        grid["sign"] = tuple(args.sign.split(","))
    rows = analytic_power.power_curves(grid)
    out = os.path.join(args.out, "power_curves.tsv")
    cols = analytic_power.POWER_COLUMNS
    tsv.write_tsv(out, cols, [[r[c] for c in cols] for r in rows])
    man = _manifest(args)
    man.outputs = [out]
    return man


def cmd_power_mc(args):
    s = _load_scenario(args)
    est = experiment.run_power_study(s, threads=args.threads)
    out = os.path.join(args.out, "power.tsv")
    tsv.write_tsv(out, ["test", "power", "se", "replicates", "alpha"],
                  [[e.test, e.power, e.se, e.replicates, e.alpha] for e in est])
    man = _manifest(args, s)
    man.outputs = [out]
    return man


def _safe_name(test):
    return test.replace(":", "_")


def cmd_calibrate_null(args):
    s = _load_scenario(args)
    cal = experiment.calibrate_null(s, threads=args.threads)
    out = os.path.join(args.out, "lambda.tsv")
    tsv.write_tsv(out, ["test", "lambda", "ks_p"],
                  [[t, cal.lam[t], cal.ks_p[t]] for t in cal.lam])
    outs = [out]
    for t, qq in cal.qq.items():
        path = os.path.join(args.out, f"qq_{_safe_name(t)}.tsv")
        tsv.write_tsv(path, ["expected_neglog10p", "observed_neglog10p"], qq.tolist())
        outs.append(path)
    man = _manifest(args, s)
    man.outputs = outs
    return man


def build_parser():
    p = argparse.ArgumentParser(prog="pcgwas", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario=False):
        sp.add_argument("--out", required=True, help="output directory (created if missing)")
        sp.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        sp.add_argument("--threads", type=int, default=1, help="worker processes")
        if scenario:
            sp.add_argument("--scenario", required=True, help="scenario file")

    sp = sub.add_parser("simulate", help="write one simulated data set")
    common(sp, scenario=True)
    sp.add_argument("--replicate", type=int, default=0, help="replicate index to draw")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("pca", help="fit PCA to a phenotype table")
    common(sp)
    sp.add_argument("--pheno", required=True)
    sp.set_defaults(func=cmd_pca)

    sp = sub.add_parser("assoc", help="association scan of PCs and traits")
    common(sp)
    sp.add_argument("--pheno", required=True)
    sp.add_argument("--model", help="PCA model table; fitted from --pheno when omitted")
    sp.add_argument("--genotypes", help="table with one column per variant; default: the phenotype file's genotype column")
    sp.add_argument("--tk", type=int, default=None, help="K for the two-group Fisher test (default: half the PCs)")
    sp.set_defaults(func=cmd_assoc)

    sp = sub.add_parser("power-analytic", help="closed-form two-trait power table")
    common(sp)
    sp.add_argument("--c", type=_float_list)
    sp.add_argument("--n", type=_int_list)
    sp.add_argument("--v1", type=_float_list)
    sp.add_argument("--v2", type=_float_list)
    sp.add_argument("--sign", help="comma list of concordant/opposite")
    sp.add_argument("--alpha", type=_float_list)
    sp.set_defaults(func=cmd_power_analytic)

    sp = sub.add_parser("power-mc", help="Monte Carlo power study")
    common(sp, scenario=True)
    sp.set_defaults(func=cmd_power_mc)

    sp = sub.add_parser("calibrate-null", help="genomic inflation under the null")
    common(sp, scenario=True)
    sp.set_defaults(func=cmd_calibrate_null)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        os.makedirs(args.out, exist_ok=True)
        man = args.func(args)
        man.finish()
        man.write(os.path.join(args.out, "manifest.json"))
    except PcgwasError as exc:
        print(f"error: {exc.kind}: {_one_line(exc)}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {_one_line(exc)}", file=sys.stderr)
        return 1
    return 0


def _one_line(exc):
    return " | ".join(str(exc).splitlines())
