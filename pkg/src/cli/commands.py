"""
Command-line surface of the FEC laboratory

Every subcommand prints a JSON summary on stdout and writes its artifacts to the
paths given on the command line. Precondition failures exit with status 2.
"""

import argparse
import csv
import json
import logging
import os
import re
import sys
from typing import List, Optional

import numpy as np

from src import __version__
from src.codes import gf2
from src.codes.basecode import load_component
from src.codes.decoder import DecoderConfig, IterativeDecoder
from src.codes.ensemble import BaseKind, load_ensemble, parse_fraction
from src.codes.exceptions import FECLabError, InputValueError
from src.codes.exit_chart import (
    BaseTransfer, area_report, base_curve, bec_threshold, ensemble_base_transfer, optimize_degrees,
    variable_curve, write_curves_csv,
)
from src.codes.graphgen import (
    build_random_instance, build_random_ldpc, build_structured, extract_parity_matrix, load_instance,
    realized_rate, save_instance, save_parity_alist,
)
from src.codes.wt2graph import build_graph2, check_necessary_condition, cycle_to_codeword
from src.config.settings import SIMULATION, load_overrides
from src.sim.channels import AWGN, BEC, make_points, parse_sweep
from src.sim.results_logger import write_results_csv
from src.sim.run_session import RunSessionManager
from src.sim.simulator import StopRule, simulate

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 2
DMIN_BRUTE_MAX_N = 28
SWEEP_FLAGS = ('--ebn0', '--p')
_NEGATIVE_VALUE = re.compile(r'^-[\d.]')


def _emit(data) -> None:
    print(json.dumps(data, indent=2, default=str))


def _write_json(path: str, data) -> None:
    with open(path, 'w') as f:
        json.dump(data, f, indent=2, default=str)


def cmd_construct(args) -> int:
    spec = load_ensemble(args.ensemble)
    if spec.base_kind == BaseKind.LDPC:
        if not args.n:
            raise InputValueError("LDPC construction needs --n")
        instance = build_random_ldpc(spec.distribution, spec.rho, args.n, seed=args.seed)
    elif spec.base_kind == BaseKind.BLOCK_TLDPC and not args.random:
        instance = build_structured(spec, args.clusters, seed=args.seed)
    else:
        instance = build_random_instance(spec, args.clusters, seed=args.seed)

    save_instance(instance, args.out)
    if args.alist:
        save_parity_alist(instance, args.alist)
    summary = {
        'name': instance.name,
        'n': instance.n,
        'm': instance.m,
        'seed': instance.seed,
        'nominal_rate': instance.nominal_rate,
        'design_rate': float(spec.design_rate),
        'degree_histogram': instance.degree_histogram(),
        'out': args.out,
    }
    if args.realized_rate:
        summary['realized_rate'] = realized_rate(instance)
    _emit(summary)
    return EXIT_OK


def cmd_analyze_g(args) -> int:
    instance = load_instance(args.code)
    G = build_graph2(instance)
    report = check_necessary_condition(instance, G)
    data = report.to_dict()
    if args.codeword and report.cycle is not None:
        word = cycle_to_codeword(G, report.cycle, instance)
        data['codeword_support'] = np.nonzero(word)[0].tolist()
    if args.report:
        _write_json(args.report, data)
    _emit(data)
    return EXIT_OK


def _load_base_transfer(args) -> BaseTransfer:
    if args.component:
        code, degree_one = load_component(args.component)
        return BaseTransfer.from_component(code, degree_one)
    return ensemble_base_transfer(load_ensemble(args.ensemble))


def cmd_exit(args) -> int:
    if args.channel != BEC:
        raise InputValueError("EXIT charts are computed on the erasure channel only")
    spec = load_ensemble(args.ensemble)
    variable = variable_curve(spec.normalized, args.p, args.samples)
    base = base_curve(ensemble_base_transfer(spec), args.p, args.samples)
    if args.out:
        write_curves_csv(args.out, variable, base)
    _emit(area_report(spec, args.p, args.samples).to_dict())
    return EXIT_OK


def cmd_threshold(args) -> int:
    spec = load_ensemble(args.ensemble)
    threshold = bec_threshold(spec, args.tolerance)
    data = {
        'ensemble': spec.name,
        'design_rate': float(spec.design_rate),
        'threshold': threshold,
        'capacity_limit': 1.0 - float(spec.design_rate),
        'reference_threshold': spec.reference_threshold,
    }
    if spec.reference_threshold is not None:
        data['gap_to_reference'] = threshold - spec.reference_threshold
    _emit(data)
    return EXIT_OK


def cmd_optimize(args) -> int:
    transfer = _load_base_transfer(args)
    nd = optimize_degrees(transfer, args.p, args.max_degree, args.lambda2_cap,
                          min_rate=args.min_rate, lambda_1=args.lambda_1, samples=args.samples)
    lambda_1 = transfer.lambda_1 if args.lambda_1 is None else args.lambda_1
    data = {
        'lambda_1': str(lambda_1),
        'tilde_lambda': nd.to_dict(),
        'sum_tilde_lambda_over_i': float(1 / nd.tilde_lambda_bar),
    }
    if args.out:
        _write_json(args.out, data)
    _emit(data)
    return EXIT_OK


def read_llrs(path: str) -> np.ndarray:
    """Channel LLRs from a CSV file: one or more values per row, optional header"""
    values: List[float] = []
    with open(path, 'r', newline='') as f:
        for row_number, row in enumerate(csv.reader(f)):
            cells = [c.strip() for c in row if c.strip()]
            try:
                values.extend(float(c) for c in cells)
            except ValueError:
                if row_number == 0:
                    continue
                raise InputValueError(f"Non-numeric LLR on row {row_number + 1} of {path}")
    return np.asarray(values, dtype=float)


def cmd_decode(args) -> int:
    instance = load_instance(args.code)
    cfg = DecoderConfig(max_iterations=args.max_iters) if args.max_iters is not None else DecoderConfig()
    outcome = IterativeDecoder(instance, cfg).decode(read_llrs(args.llrs))
    data = outcome.to_dict()
    if args.out:
        _write_json(args.out, data)
    _emit(data)
    return EXIT_OK


def cmd_simulate(args) -> int:
    instance = load_instance(args.code)
    if args.channel == AWGN:
        rate = args.rate or instance.nominal_rate
        points = make_points(AWGN, parse_sweep(args.ebn0 or '-0.8:0.2:0.4'), rate)
    else:
        if not args.p:
            raise InputValueError("BEC simulation needs --p")
        points = make_points(BEC, parse_sweep(args.p))

    stop = StopRule(args.min_errors or SIMULATION['min_frame_errors'],
                    args.max_frames or SIMULATION['max_frames'])
    cfg = DecoderConfig(max_iterations=args.max_iters) if args.max_iters is not None else DecoderConfig()

    session = None
    out = args.out
    if out is None:
        session = RunSessionManager(args.runs_dir)
        session.create_session(args.name, {
            'command': 'simulate',
            'code': args.code,
            'seed': args.seed,
            'channel': args.channel,
            'points': [str(p) for p in points],
            'transmit': args.transmit,
        })
        out = session.get_output_path('results.csv')

    threads = args.threads or int(os.environ.get('FECLAB_THREADS', SIMULATION['threads']))
    result = simulate(instance, points, stop, cfg, seed=args.seed, transmit=args.transmit,
                      threads=threads)
    write_results_csv(out, result)
    if session:
        session.finish_session({'wall_time_s': result.wall_time, 'results': 'results.csv'})
    _emit(dict(result.to_dict(), out=out))
    return EXIT_OK


def cmd_dmin_brute(args) -> int:
    instance = load_instance(args.code)
    if instance.n > DMIN_BRUTE_MAX_N:
        raise InputValueError(f"Exhaustive d_min is limited to n <= {DMIN_BRUTE_MAX_N}, got {instance.n}")
    d = gf2.minimum_distance(extract_parity_matrix(instance), max_dim=DMIN_BRUTE_MAX_N)
    _emit({'code': args.code, 'n': instance.n, 'dmin': d})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, default=0, help='random seed (default: 0)')
    common.add_argument('--config', help='YAML settings override file')
    common.add_argument('--log-level', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
                        help='console log level')

    parser = argparse.ArgumentParser(prog='feclab', description='Sparse-graph code laboratory')
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('construct', parents=[common], help='build a code instance')
    p.add_argument('--ensemble', required=True, help='ensemble JSON or reference name')
    p.add_argument('--clusters', type=int, default=625, help='block count M (block bases)')
    p.add_argument('--n', type=int, help='variable nodes (LDPC ensembles)')
    p.add_argument('--random', action='store_true', help='unstructured instance over a block base')
    p.add_argument('--out', required=True, help='instance JSON output')
    p.add_argument('--alist', help='also write the parity-check matrix in alist format')
    p.add_argument('--realized-rate', action='store_true', help='compute 1 - rank(H)/n')
    p.set_defaults(handler=cmd_construct)

    p = sub.add_parser('analyze-g', parents=[common], help='graph of partial-weight-2 codewords')
    p.add_argument('--code', required=True)
    p.add_argument('--report', help='report JSON output')
    p.add_argument('--codeword', action='store_true', help='include the codeword of the lightest cycle')
    p.set_defaults(handler=cmd_analyze_g)

    p = sub.add_parser('exit', parents=[common], help='EXIT curves and area report')
    p.add_argument('--ensemble', '--code', dest='ensemble', required=True)
    p.add_argument('--channel', choices=[BEC], default=BEC)
    p.add_argument('--p', type=float, required=True)
    p.add_argument('--samples', type=int)
    p.add_argument('--out', help='curves CSV output')
    p.set_defaults(handler=cmd_exit)

    p = sub.add_parser('threshold', parents=[common], help='BEC density-evolution threshold')
    p.add_argument('--ensemble', required=True)
    p.add_argument('--tolerance', type=float)
    p.set_defaults(handler=cmd_threshold)

    p = sub.add_parser('optimize', parents=[common], help='LP degree-distribution optimization')
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument('--ensemble', help='take the base family of this ensemble')
    source.add_argument('--component', help='component JSON file')
    p.add_argument('--p', type=float, required=True, help='target erasure probability')
    p.add_argument('--max-degree', type=int, default=12)
    p.add_argument('--lambda2-cap', type=float, default=0.5)
    p.add_argument('--min-rate', type=parse_fraction, help='minimum design rate')
    p.add_argument('--lambda-1', type=parse_fraction, help="degree-1 edge fraction (default: the base's)")
    p.add_argument('--samples', type=int)
    p.add_argument('--out', help='optimized distribution JSON output')
    p.set_defaults(handler=cmd_optimize)

    p = sub.add_parser('decode', parents=[common], help='decode one frame of channel LLRs')
    p.add_argument('--code', required=True)
    p.add_argument('--llrs', required=True, help='CSV of channel LLRs (0 marks an erasure)')
    p.add_argument('--max-iters', type=int, help='decoder iteration cap (default: 200)')
    p.add_argument('--out', help='outcome JSON output')
    p.set_defaults(handler=cmd_decode)

    p = sub.add_parser('simulate', parents=[common], help='Monte Carlo WER/BER sweep')
    p.add_argument('--code', required=True)
    p.add_argument('--channel', choices=[BEC, AWGN], default=AWGN)
    p.add_argument('--ebn0', help="Eb/N0 sweep in dB: 'start:step:stop' or a list")
    p.add_argument('--p', help="erasure probabilities: 'start:step:stop' or a list")
    p.add_argument('--rate', type=float, help='rate for the Eb/N0 mapping (default: nominal rate)')
    p.add_argument('--min-errors', type=int)
    p.add_argument('--max-frames', type=int)
    p.add_argument('--max-iters', type=int, help='decoder iteration cap (default: 200)')
    p.add_argument('--threads', type=int, help='worker threads (default: FECLAB_THREADS or CPU count)')
    p.add_argument('--transmit', choices=['zero', 'random'], default='zero')
    p.add_argument('--out', help='results CSV (default: a new run directory)')
    p.add_argument('--runs-dir', help='parent of run directories')
    p.add_argument('--name', help='run name')
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser('dmin-brute', parents=[common], help='exhaustive minimum distance (n <= 28)')
    p.add_argument('--code', required=True)
    p.set_defaults(handler=cmd_dmin_brute)

    return parser


def _set_console_level(level: str) -> None:
    for handler in logging.getLogger().handlers:
        if isinstance(handler, logging.StreamHandler) and not isinstance(handler, logging.FileHandler):
            handler.setLevel(level)


def _join_negative_sweeps(argv: List[str]) -> List[str]:
    """Glue '--ebn0 -0.8:0.1:0.0' into '--ebn0=-0.8:0.1:0.0'

    argparse takes any token starting with '-' that is not a plain number for an
    option, so negative sweep ranges and lists would otherwise be rejected.
    """
    out = []
    i = 0
    while i < len(argv):
        token = argv[i]
        if token in SWEEP_FLAGS and i + 1 < len(argv) and _NEGATIVE_VALUE.match(argv[i + 1]):
            out.append(f"{token}={argv[i + 1]}")
            i += 2
            continue
        out.append(token)
        i += 1
    return out


def cli_main(argv: Optional[List[str]] = None) -> int:
    """Parse argv, run one subcommand and return its exit code"""
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(_join_negative_sweeps(argv))
    except SystemExit as e:
        return int(e.code or 0)

    if args.log_level:
        _set_console_level(args.log_level)
    try:
        if args.config:
            load_overrides(args.config)
        logger.info(f"Running {args.command} (seed={args.seed})")
        return args.handler(args)
    except (FECLabError, OSError, json.JSONDecodeError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_FAILURE
