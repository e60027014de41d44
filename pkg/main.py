#!/usr/bin/env python3

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import ValidationError

from spblab import settings
from spblab.app.harness import checkpoint_stats, fit_checkpoints, run_experiment
from spblab.app.lemmas import verify_lemmas
from spblab.database.trace_store import SUMMARY_NAME, TraceStore, dump_report, load_config, load_game, load_graph
from spblab.models.schemas import AnalyzeReport, ExperimentSummary, FitReport, GraphReport, LemmaReport
from spblab.models.simple_schemas import ObservabilityClass
from spblab.problems.graph_bandits import (EXHAUSTIVE_LIMIT, analyze_graph, integer_domination_number,
                                           weak_domination_number)
from spblab.problems.pm_games import (build_estimator, estimation_functions, neighbor_graph, validate_game)
from spblab.utils.errors import (ContractError, DomainError, GameError, LinearProgramError, NotGloballyObservable,
                                 SpbError)

logger = logging.getLogger("spblab")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_CONTRACT = 3


class SpbApp:
    def __init__(self, output_dir: Optional[Path] = None, strict: Optional[bool] = None,
                 workers: Optional[int] = None):
        self.output_dir = Path(output_dir) if output_dir is not None else settings.OUTPUT_DIR
        self.strict = settings.STRICT if strict is None else strict
        self.workers = settings.WORKERS if workers is None else workers

    def run(self, config_path: Path) -> ExperimentSummary:
        """Run every replicate of an experiment config and persist traces plus summary."""
        config = load_config(config_path)
        output = Path(config.output) if config.output else self.output_dir / Path(config_path).stem
        traces, summary = run_experiment(config, parallel=self.workers, strict=self.strict)
        store = TraceStore(output)
        for trace in traces:
            store.write_trace(trace)
        store.write_report(summary)
        logger.info("wrote %d traces and %s to %s", len(traces), SUMMARY_NAME, output)
        self.last_output = output
        return summary

    def analyze(self, game_path: Path) -> AnalyzeReport:
        game = load_game(game_path)
        pareto = validate_game(game)
        edges = neighbor_graph(game, pareto)
        labels = [[a + 1, b + 1] for a, b in edges]
        try:
            w, residuals = estimation_functions(game, edges)
        except NotGloballyObservable as e:
            return AnalyzeReport(k=game.k, d=game.d, pareto=pareto.tolist(), edges=labels,
                                 global_observability=False, message=str(e))
        in_tree, _, c_g = build_estimator(game, edges, w)
        return AnalyzeReport(
            k=game.k,
            d=game.d,
            pareto=pareto.tolist(),
            edges=labels,
            global_observability=True,
            c_g=c_g,
            root=1,
            in_tree={str(child + 1): parent + 1 for child, parent in sorted(in_tree.items())},
            residuals={f"{a + 1}-{b + 1}": r for (a, b), r in residuals.items()},
        )

    def analyze_graph(self, graph_path: Path) -> GraphReport:
        graph = analyze_graph(load_graph(graph_path))
        if graph.obs_class == ObservabilityClass.NON_OBSERVABLE:
            return GraphReport(k=graph.k, obs_class=graph.obs_class.value)
        small = graph.k <= EXHAUSTIVE_LIMIT
        return GraphReport(
            k=graph.k,
            obs_class=graph.obs_class.value,
            delta_star=graph.delta_star,
            x_star=graph.x_star.tolist(),
            u_dist=graph.u_dist.weights.tolist(),
            integer_domination=integer_domination_number(graph) if small else None,
            weak_domination=weak_domination_number(graph) if small else None,
        )

    def verify_lemmas(self, instances: int, seed: int) -> LemmaReport:
        return verify_lemmas(seed, instances)

    def fit(self, traces_dir: Path) -> FitReport:
        traces = TraceStore(traces_dir).read_traces()
        horizon = min(len(t["round"]) for t in traces)
        cum_regret = np.array([t["cum_regret"][:horizon] for t in traces])
        cum_cost = np.array([np.cumsum(t["round_cost"][:horizon]) for t in traces])
        stats = checkpoint_stats(cum_regret, cum_cost)
        paid = bool(cum_cost[:, -1].any()) if horizon else False
        return FitReport(traces=str(traces_dir), replicates=len(traces), checkpoints=stats,
                         fit=fit_checkpoints(stats), cost_fit=fit_checkpoints(stats, "cost") if paid else None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spblab", description="SPB-matching FTRL experiments and checks")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--strict", action="store_true", help="abort on the first invariant violation")
    run.add_argument("--parallel", type=int, default=None, help="worker processes for replicates")

    analyze = sub.add_parser("analyze", help="analyze a partial monitoring game")
    analyze.add_argument("game", type=Path)

    analyze_g = sub.add_parser("analyze-graph", help="analyze a feedback graph")
    analyze_g.add_argument("graph", type=Path)

    lemmas = sub.add_parser("verify-lemmas", help="randomised learning-rate inequality checks")
    lemmas.add_argument("--instances", type=int, default=settings.LEMMA_INSTANCES)
    lemmas.add_argument("--seed", type=int, default=settings.BASE_SEED)
    lemmas.add_argument("--out", type=Path, default=None)

    fit = sub.add_parser("fit", help="fit regret exponents from trace files")
    fit.add_argument("--traces", required=True, type=Path)
    fit.add_argument("--out", type=Path, default=None)
    return parser


def _emit(report, out: Optional[Path] = None):
    text = dump_report(report)
    print(text)
    if out is not None:
        TraceStore(out.parent).write_report(report, path=out)


def _dispatch(args) -> int:
    if args.command == "run":
        app = SpbApp(strict=args.strict or None, workers=args.parallel)
        summary = app.run(args.config)
        last = summary.checkpoints[-1]
        print(f"✅ {summary.problem.value} / {summary.regime.value}: {summary.replicates} replicates, "
              f"T={summary.horizon}")
        print(f"📈 mean regret at T={last.T}: {last.mean_regret:.4f} (std {last.std_regret:.4f})")
        if summary.fit is not None:
            print(f"📐 log-log slope: {summary.fit.slope:.4f} (r²={summary.fit.r_squared:.4f})")
        if summary.cost_fit is not None:
            print(f"💰 cost slope: {summary.cost_fit.slope:.4f}")
        if summary.violations:
            print(f"⚠️  {len(summary.violations)} invariant violations recorded")
        print(f"📁 traces written to {app.last_output}")
        return EXIT_OK

    app = SpbApp()
    if args.command == "analyze":
        _emit(app.analyze(args.game))
        return EXIT_OK
    if args.command == "analyze-graph":
        _emit(app.analyze_graph(args.graph))
        return EXIT_OK
    if args.command == "verify-lemmas":
        report = app.verify_lemmas(args.instances, args.seed)
        _emit(report, args.out)
        if not report.all_passed:
            print("❌ some inequality checks failed", file=sys.stderr)
            return EXIT_CONTRACT
        print(f"✅ all checks passed on {report.instances} instances", file=sys.stderr)
        return EXIT_OK
    if args.command == "fit":
        report = app.fit(args.traces)
        _emit(report, args.out)
        return EXIT_OK
    raise DomainError(f"unknown command {args.command}")


def main(argv=None) -> int:
    logging.basicConfig(level=settings.LOG_LEVEL, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ValidationError, DomainError, GameError, LinearProgramError, FileNotFoundError) as e:
        print(f"❌ configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ContractError as e:
        print(f"❌ contract failure: {e}", file=sys.stderr)
        return EXIT_CONTRACT
    except SpbError as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
