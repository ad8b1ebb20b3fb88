"""Command-line entry point: ``netblock {test,network,simulate,metrics}``.

Exit codes: 0 success, 2 usage error, 3 data error.
"""

from __future__ import annotations

import argparse
import os
import sys

from .bench import ExperimentSpec, run_experiment
from .dataio import (
    ResultDocument,
    format_adjacency,
    preprocess,
    read_adjacency,
    read_panel_csv,
)
from .errors import DataError, NetblockError, ParseError
from .multiplicity import group_consensus_network, identify_network, network_metrics
from .pairtests import normalize_method, pairwise_scan

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 2, 3


class UsageError(Exception):
    pass


def _dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not dims or min(dims) < 1:
        raise argparse.ArgumentTypeError("dimensions must be positive")
    return dims


def _methods(text: str) -> tuple[str, ...]:
    try:
        return tuple(normalize_method(m) for m in text.split(","))
    except NetblockError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--solver", choices=("lasso", "dantzig"), default="lasso")
    p.add_argument("--delta", type=float, default=None,
                   help="penalty multiplier (default 2.02 for lasso, 2.0 for dantzig)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker count (falls back to NETBLOCK_THREADS, then 1)")
    p.add_argument("--out", default=None, help="write output here instead of stdout")
    p.add_argument("--format", choices=("table", "doc"), default="table")
    p.add_argument("--seed", type=int, default=0)


def _add_data(p: argparse.ArgumentParser, many=False):
    p.add_argument("--data", required=True, nargs="+" if many else None)
    p.add_argument("--layout", required=True)
    p.add_argument("--detrend", action="store_true")
    p.add_argument("--whiten", action="store_true")
    p.add_argument("--pca-fraction", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netblock", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="test every region pair at a marginal level")
    _add_data(t)
    t.add_argument("--method", default="1", choices=("1", "2", "3"))
    _add_common(t)

    nw = sub.add_parser("network", help="FWER-controlled region network")
    _add_data(nw, many=True)
    nw.add_argument("--method", default="1", choices=("1", "2"))
    nw.add_argument("--quorum", type=float, default=0.85,
                    help="fraction of subjects an edge needs with several --data files")
    _add_common(nw)

    sim = sub.add_parser("simulate", help="Monte Carlo size / power / network experiment")
    sim.add_argument("--kind", choices=("size", "power", "network"), default="size")
    sim.add_argument("--model", type=int, choices=(1, 2, 3, 4, 5), default=1)
    sim.add_argument("--dims", type=_dims, default=(50, 50),
                     help="region widths, e.g. 50,50; with --p a single width is repeated")
    sim.add_argument("--n", type=int, default=150)
    sim.add_argument("--p", type=int, default=None, help="number of regions (network)")
    sim.add_argument("--edge-prob", type=float, default=0.01)
    sim.add_argument("--replicates", type=int, default=1000)
    sim.add_argument("--method", type=_methods, default=("test1",),
                     help="comma-separated tests, e.g. 1,2,3")
    _add_common(sim)

    met = sub.add_parser("metrics", help="score saved network documents against a truth grid")
    met.add_argument("--truth", required=True, help="0/1 adjacency grid")
    met.add_argument("--estimates", required=True, nargs="+", help="result documents")
    met.add_argument("--out", default=None)
    return parser


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    return max(1, int(os.environ.get("NETBLOCK_THREADS", "1") or 1))


def _load(path, args):
    panels, layout = read_panel_csv(path, args.layout)
    panels = preprocess(panels, detrend=args.detrend, whiten=args.whiten,
                        pca_fraction=args.pca_fraction)
    return panels, layout


def _spec_echo(args) -> dict:
    skip = {"out", "format", "threads", "command"}
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in vars(args).items() if k not in skip}


def _outcome_table(outcomes, names) -> str:
    lines = ["region_s\tregion_t\tmethod\tstatistic\tp_value\tthreshold\treject\targmax"]
    for o in outcomes:
        s, t = o.pair
        where = "" if o.argmax is None else f"{o.argmax[0]},{o.argmax[1]}"
        lines.append(
            f"{names[s]}\t{names[t]}\t{o.method}\t{o.statistic:.6f}\t{o.p_value:.6g}"
            f"\t{o.threshold:.6f}\t{int(o.reject)}\t{where}"
        )
    return "\n".join(lines) + "\n"


def cmd_test(args) -> str:
    panels, layout = _load(args.data, args)
    outcomes = pairwise_scan(panels, args.alpha, normalize_method(args.method),
                             solver=args.solver, delta=args.delta, workers=_threads(args))
    if args.format == "doc":
        doc = ResultDocument(command="test", seed=args.seed, spec=_spec_echo(args),
                             regions=list(layout.names), outcomes=outcomes)
        return doc.dumps() + "\n"
    return _outcome_table(outcomes, layout.names)


def cmd_network(args) -> str:
    subjects = []
    names = None
    for path in args.data:
        panels, layout = _load(path, args)
        if names is not None and tuple(layout.names) != names:
            raise DataError("all subjects must share the same layout")
        names = tuple(layout.names)
        outcomes = pairwise_scan(panels, args.alpha, normalize_method(args.method),
                                 solver=args.solver, delta=args.delta, workers=_threads(args))
        subjects.append(identify_network(outcomes, layout.p, args.alpha))
    if len(subjects) == 1:
        adj = subjects[0].adjacency
    else:
        adj = group_consensus_network(subjects, args.quorum)
    if args.format == "doc":
        net = subjects[0]
        if len(subjects) > 1:
            net = type(net)(p=net.p, adjacency=adj, outcomes=[], alpha=args.alpha,
                            threshold=net.threshold)
        doc = ResultDocument(command="network", seed=args.seed, spec=_spec_echo(args),
                             regions=list(names), outcomes=list(net.outcomes), network=net)
        return doc.dumps() + "\n"
    return format_adjacency(adj, names)


def cmd_simulate(args) -> str:
    dims = args.dims
    if args.p is not None:
        if len(dims) != 1:
            raise UsageError("with --p give a single width in --dims")
        dims = dims * args.p
    spec = ExperimentSpec(
        kind=args.kind, model_id=args.model, n=args.n, dims=dims,
        replicates=args.replicates, alpha=args.alpha, methods=args.method,
        seed=args.seed, edge_prob=args.edge_prob, solver=args.solver, delta=args.delta,
    )
    result = run_experiment(spec, workers=_threads(args))
    if args.format == "doc":
        doc = ResultDocument(command="simulate", seed=args.seed, spec=spec.to_dict(),
                             experiment=result)
        return doc.dumps() + "\n"
    dim_text = ",".join(map(str, spec.dims)) if len(set(spec.dims)) > 1 or len(spec.dims) == 2 \
        else f"{len(spec.dims)}x{spec.dims[0]}"
    if spec.kind == "network":
        lines = ["kind\tmodel\tn\tdims\tmethod\tnettpr\tfwer\tfdr\tse\tseconds"]
        for m in spec.methods:
            r = result.network[m]
            lines.append(f"{spec.kind}\t{spec.model_id}\t{spec.n}\t{dim_text}\t{m}\t"
                         f"{r['nettpr']:.4f}\t{r['fwer']:.4f}\t{r['fdr']:.4f}\t"
                         f"{result.se[m]:.4f}\t{result.seconds:.1f}")
    else:
        lines = ["kind\tmodel\tn\tdims\tmethod\trate\tse\tseconds"]
        for m in spec.methods:
            lines.append(f"{spec.kind}\t{spec.model_id}\t{spec.n}\t{dim_text}\t{m}\t"
                         f"{result.rates[m]:.4f}\t{result.se[m]:.4f}\t{result.seconds:.1f}")
    return "\n".join(lines) + "\n"


def cmd_metrics(args) -> str:
    truth = read_adjacency(args.truth)
    estimates = []
    for path in args.estimates:
        doc = ResultDocument.load(path)
        if doc.network is None:
            raise ParseError(f"{path} holds no network estimate")
        estimates.append(doc.network)
    nettpr, fwer, fdr = network_metrics(estimates, truth)
    return f"nettpr\tfwer\tfdr\n{nettpr:.4f}\t{fwer:.4f}\t{fdr:.4f}\n"


COMMANDS = {"test": cmd_test, "network": cmd_network, "simulate": cmd_simulate,
            "metrics": cmd_metrics}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        text = COMMANDS[args.command](args)
    except (DataError, OSError) as exc:
        print(f"netblock: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (UsageError, NetblockError) as exc:
        print(f"netblock: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cli_main(argv=None) -> int:
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())
