#!/usr/bin/env python3
import os
import sys
import time
import logging
import argparse
from typing import Dict, List, Optional

import numpy as np
from dotenv import load_dotenv

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from src import __version__
from src.config import load_settings
from src.embeddings import make_embedding, verify_distortion
from src.errors import CoresetError, InvalidParameterError
from src.evaluator import FamilyConfig, distortion_over_centers, exhaustive_distortion
from src.geometry import ClusteringParams, WeightedPointSet, cost_z
from src.lowerbound import (
    LbInstance,
    adversarial_center_set,
    build_instance,
    check_instance,
    default_target_copy,
    verify_claims,
    weight_probe,
)
from src.pointset_io import parse_indices, parse_pointset, read_json, write_json, write_pointset
from src.report_console import (
    format_claims_summary,
    format_coreset_summary,
    format_distortion_summary,
    format_embedding_summary,
    format_sweep_summary,
    print_summary,
)
from src.rng import RNG_NAME, derive_seed
from src.sampler import construct_coreset, sample_weights_by_cluster
from src.sweep import ExperimentConfig, run_sweep, write_rows

load_dotenv()
logger = logging.getLogger(__name__)


class CoresetToolkit:
    def __init__(self, config: Dict = None):
        self.config = config or {}
        self.seed = self.config.get('seed', 0)
        self.threads = self.config.get('threads', 1)
        self.reproducible = self.config.get('reproducible', False)
        self.quiet = self.config.get('quiet', False)

    def _header(self, command: str, args: Dict) -> Dict:
        return {
            'tool': 'kzcoreset',
            'version': __version__,
            'rng': RNG_NAME,
            'command': command,
            'seed': self.seed,
            'config': args,
        }

    def _timing(self, start: float) -> Optional[float]:
        return None if self.reproducible else round((time.perf_counter() - start) * 1000.0, 3)

    def _show(self, message: str, passed: bool = True):
        if not self.quiet:
            print_summary(message, passed)

    def coreset(self, args) -> int:
        start = time.perf_counter()
        P = parse_pointset(args.input)
        params = ClusteringParams(k=args.k, z=args.z, eps=args.eps)
        families = FamilyConfig.parse(args.families)
        if args.repetitions < 1:
            raise InvalidParameterError(f"repetitions must be at least 1, got {args.repetitions}")

        best, best_error, attempts = None, None, []
        for rep in range(args.repetitions):
            seed = self.seed if rep == 0 else derive_seed(self.seed, 'repetition', str(rep))
            run = construct_coreset(P, params, args.gamma_const, seed,
                                    local_search=args.local_search, threads=self.threads)
            evaluation = None
            if args.repetitions > 1:
                evaluation = distortion_over_centers(P, run.coreset, params, families, seed,
                                                     solution=run.solution, threads=self.threads)
                attempts.append({'seed': seed, 'max_rel_error': evaluation.max_rel_error,
                                 'passed': evaluation.passed})
            error = evaluation.max_rel_error if evaluation else 0.0
            if best is None or error < best_error:
                best, best_error, best_eval = run, error, evaluation

        coreset = best.coreset
        write_pointset(args.out, coreset.points, weighted=True)
        report = self._header('coreset', vars(args))
        report.update(
            n=P.n, d=P.dim, k=params.k, z=params.z, eps=params.eps,
            gamma_const=args.gamma_const,
            gamma_nominal=coreset.gamma_nominal,
            gamma_used=coreset.gamma_used,
            capped_groups=coreset.capped_groups,
            presize=coreset.presize,
            coreset_size=coreset.size,
            total_weight=coreset.total_weight,
            num_groups=len(best.groups.groups),
            leftover=best.groups.leftover,
            sampled_weight_by_cluster=sample_weights_by_cluster(coreset, best.groups.ring_partition),
            coreset_seed=coreset.seed,
            seeding_cost=best.seeding_cost,
            astar_cost=best.solution.total_cost,
            empirical_approx_ratio=(best.seeding_cost / best.solution.total_cost
                                    if best.solution.total_cost > 0 else 1.0),
            provenance=coreset.provenance,
            source_indices=coreset.source_indices,
            repetitions=args.repetitions,
            attempts=attempts,
            success_rate=(sum(a['passed'] for a in attempts) / len(attempts)) if attempts else None,
            evaluation=({'max_rel_error': best_eval.max_rel_error, 'passed': best_eval.passed}
                        if best_eval else None),
            runtime_ms=self._timing(start),
        )
        write_json(args.report, report)
        if args.dump_groups:
            write_json(args.dump_groups, best.groups.to_json())
        self._show(format_coreset_summary(report))
        return 0

    def gen_lb(self, args) -> int:
        inst = build_instance(args.k, args.z, args.eps, self.seed,
                              copy_separation=args.copy_separation, ground_size=args.ground_size)
        write_pointset(args.out, inst.points, weighted=False)
        meta = self._header('gen-lb', vars(args))
        meta.update(inst.to_meta())
        write_json(args.meta, meta)
        if not self.quiet:
            print_summary(f"Lower-bound instance: {inst.points.n} points, t={inst.t:.6g}, "
                          f"B={inst.ground_size}, copies={inst.copies}")
        return 0

    def verify_lb(self, args) -> int:
        start = time.perf_counter()
        inst = LbInstance.from_meta(read_json(args.meta))
        support = parse_indices(args.coreset_support) if args.coreset_support else []
        weights = None
        if args.support_weights:
            weights = parse_pointset(args.support_weights).weights
        copy = args.copy if args.copy is not None else default_target_copy(inst, support)
        adv = adversarial_center_set(inst, support, copy)
        claims = verify_claims(inst, support, adv, support_weights=weights)
        claims.violations.extend(check_instance(inst))

        report = self._header('verify-lb', vars(args))
        report.update(claims=claims, ok=claims.ok, runtime_ms=self._timing(start))
        if support:
            probe_weights = weights if weights is not None else np.ones(len(support))
            report['weight_probe'] = weight_probe(inst, support, probe_weights, copy)
        write_json(args.report, report)
        summary = {'target_copy': claims.target_copy, 't': claims.t, 'checked_points': claims.checked_points,
                   'covered_points': claims.covered_points, 'gap': claims.gap,
                   'violations': claims.violations}
        self._show(format_claims_summary(summary), claims.ok)
        return 0 if claims.ok else 1

    def evaluate(self, args) -> int:
        start = time.perf_counter()
        P = parse_pointset(args.input)
        S = parse_pointset(args.coreset)
        params = ClusteringParams(k=args.k, z=args.z, eps=args.eps)
        if args.exhaustive:
            candidates = parse_pointset(args.candidates).points if args.candidates else P.points
            result = exhaustive_distortion(P, S, params, candidates, threads=self.threads)
        else:
            lb_instance, lb_support = None, None
            if args.lb_meta:
                lb_instance = LbInstance.from_meta(read_json(args.lb_meta))
                lb_support = parse_indices(args.lb_support) if args.lb_support else []
            result = distortion_over_centers(P, S, params, FamilyConfig.parse(args.families), self.seed,
                                             lb_instance=lb_instance, lb_support=lb_support,
                                             threads=self.threads)
        report = self._header('evaluate', vars(args))
        report.update(
            eps=params.eps,
            max_rel_error=result.max_rel_error,
            num_center_sets=result.num_center_sets,
            families=result.families,
            worst_family=result.worst_family,
            worst_center_set=result.worst_center_set,
            passed=result.passed,
            true_cost_at_worst=(cost_z(P, result.worst_center_set, params.z)
                                if result.worst_center_set is not None else None),
            runtime_ms=self._timing(start),
        )
        write_json(args.report, report)
        self._show(format_distortion_summary({
            'passed': result.passed, 'max_rel_error': result.max_rel_error, 'eps': params.eps,
            'num_center_sets': result.num_center_sets,
            'families': {name: vars(stats) for name, stats in result.families.items()},
        }), result.passed)
        return 0

    def embed(self, args) -> int:
        start = time.perf_counter()
        X = parse_pointset(args.input)
        emb = make_embedding(X.points, args.alpha, args.mode, self.seed, c_m=args.cm)
        queries = parse_pointset(args.queries).points if args.queries else np.zeros((0, X.dim))
        result = verify_distortion(emb, queries)
        report = self._header('embed', vars(args))
        report.update(
            target_dim=emb.target_dim,
            radius=emb.radius,
            retries=emb.retries,
            anchor_distortion=emb.anchor_distortion,
            c_m=emb.c_m,
            result=result,
            runtime_ms=self._timing(start),
        )
        write_json(args.report, report)
        self._show(format_embedding_summary(vars(result)), result.certificate_failures == 0)
        return 0

    def sweep(self, args) -> int:
        raw = read_json(args.config)
        cfg = ExperimentConfig.from_dict(raw)
        cfg.threads = max(cfg.threads, self.threads)
        cfg.reproducible = cfg.reproducible or self.reproducible
        output = args.out or cfg.output
        if not output:
            raise CoresetError("no output path: pass --out or set 'output' in the config")
        df = run_sweep(cfg)
        write_rows(df, output)
        rows = df.to_dict('records')
        failed = sum(bool(row['error']) for row in rows)
        self._show(format_sweep_summary(rows), failed == 0)
        return 0 if failed == 0 else 1


def build_parser(settings: Dict) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, default=0, help='Root seed (default: 0)')
    common.add_argument('--threads', type=int, default=settings['threads'],
                        help=f"Worker threads (default: {settings['threads']})")
    common.add_argument('--reproducible', action='store_true',
                        help='Write timings as null so outputs are byte-identical')
    common.add_argument('--log-level', default=settings['log_level'],
                        help=f"Logging level (default: {settings['log_level']})")
    common.add_argument('--quiet', action='store_true', help='No console summary')

    parser = argparse.ArgumentParser(description='(k, z)-clustering coresets, lower-bound instances '
                                                 'and terminal embeddings')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('coreset', parents=[common], help='Build a coreset')
    p.add_argument('--input', required=True)
    p.add_argument('--k', type=int, required=True)
    p.add_argument('--z', type=float, default=2.0)
    p.add_argument('--eps', type=float, required=True)
    p.add_argument('--gamma-const', type=float, default=settings['gamma_const'],
                   help=f"Sample-size constant (default: {settings['gamma_const']})")
    p.add_argument('--local-search', type=int, default=0,
                   help='Idle passes before local search stops (default: 0, off)')
    p.add_argument('--repetitions', type=int, default=1,
                   help='Build R coresets and keep the one with the smallest max error')
    p.add_argument('--families', default='random:200,perturbed:20',
                   help='Center-set families used to rank repetitions')
    p.add_argument('--out', required=True)
    p.add_argument('--report', required=True)
    p.add_argument('--dump-groups', help='Write the ring/group structure as JSON')

    p = sub.add_parser('gen-lb', parents=[common], help='Generate a lower-bound instance')
    p.add_argument('--k', type=int, required=True)
    p.add_argument('--z', type=float, default=2.0)
    p.add_argument('--eps', type=float, default=None,
                   help='Omit for the k^(1/4) special case')
    p.add_argument('--ground-size', type=int, default=None)
    p.add_argument('--copy-separation', type=float, default=None)
    p.add_argument('--out', required=True)
    p.add_argument('--meta', required=True)

    p = sub.add_parser('verify-lb', parents=[common], help='Check the lower-bound identities')
    p.add_argument('--meta', required=True)
    p.add_argument('--coreset-support', default=None, help='File of point indices')
    p.add_argument('--support-weights', default=None,
                   help='Weighted point-set file whose weights align with the support')
    p.add_argument('--copy', type=int, default=None)
    p.add_argument('--report', required=True)

    p = sub.add_parser('evaluate', parents=[common], help='Measure coreset distortion')
    p.add_argument('--input', required=True)
    p.add_argument('--coreset', required=True)
    p.add_argument('--k', type=int, required=True)
    p.add_argument('--z', type=float, default=2.0)
    p.add_argument('--eps', type=float, required=True)
    p.add_argument('--families', default='random:1000,perturbed:100')
    p.add_argument('--lb-meta', default=None)
    p.add_argument('--lb-support', default=None)
    p.add_argument('--exhaustive', action='store_true')
    p.add_argument('--candidates', default=None)
    p.add_argument('--report', required=True)

    p = sub.add_parser('embed', parents=[common], help='Build and check a terminal embedding')
    p.add_argument('--input', required=True)
    p.add_argument('--alpha', type=float, required=True)
    p.add_argument('--mode', choices=['terminal', 'additive'], default='additive')
    p.add_argument('--queries', default=None)
    p.add_argument('--cm', type=float, default=settings['embed_cm'])
    p.add_argument('--report', required=True)

    p = sub.add_parser('sweep', parents=[common], help='Run an experiment grid')
    p.add_argument('--config', required=True)
    p.add_argument('--out', default=None)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    settings = load_settings()
    args = build_parser(settings).parse_args(argv)

    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )

    config = {
        'seed': args.seed,
        'threads': max(1, args.threads),
        'reproducible': args.reproducible,
        'quiet': args.quiet,
    }
    toolkit = CoresetToolkit(config)
    handler = getattr(toolkit, args.command.replace('-', '_'))
    try:
        return handler(args)
    except CoresetError as e:
        logger.error(f"{args.command} failed: {e}")
        return 2
    except OSError as e:
        logger.error(f"{args.command} failed: {e}")
        return 2


if __name__ == '__main__':
    sys.exit(main())
