#!/usr/bin/env python3

import sys
import logging
import argparse
import traceback
from pathlib import Path
from datetime import datetime
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .core.coefficient_engine import coefficients_at
from .core.curvature_engine import CurvatureEngine
from .core.errors import ConfigError, SzegoError
from .experiments.config_loader import (EXPANSION_M_VALUES, ExperimentConfig, build_config, config_keys_help,
                                        load_config, parse_int_list, parse_points)
from .experiments.decay_scanner import DECAY_COLUMNS, EQUIVALENCE_COLUMNS, GRADIENT_COLUMNS, decay_scan
from .experiments.expansion_runner import EXPANSION_COLUMNS, run_expansion
from .experiments.invariant_checks import run_checks
from .experiments.oscillatory_demo import DEMO_COLUMNS, oscillatory_demo
from .experiments.report_writer import ReportWriter, render_csv, residual_series, write_outputs
from .experiments.sampling import ordered_map, resolve_points

logger = logging.getLogger('szego_toolkit')

SUBCOMMANDS = ('coeffs', 'kernel', 'expansion', 'decay', 'checks', 'demo')
DEMO_M_VALUES = tuple(range(1, 41))
REPORT_COLUMNS = ('point', 'x', 'S_L', 'S_Theta_L', 'lap_S_L', 'lap_S_Theta_L', 'a_density', 'b_density',
                  'det_Rdot', 'tw_scalar', 'Rdet_norm2', 'Ric_norm2', 'Ric_Rdet_pairing', 'RT_norm2',
                  'b0', 'b1', 'b2')
KERNEL_COLUMNS = ('point', 'x', 'r', 'm', 'S_m')

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


@dataclass
class Workbench:
    """Holds the active configuration and the shared writer; one method per subcommand."""
    config: ExperimentConfig = field(default_factory=lambda: ExperimentConfig().validate())
    writer: ReportWriter = field(default_factory=ReportWriter)
    stdout: object = field(default=None, repr=False)

    def __post_init__(self):
        if self.stdout is None:
            self.stdout = sys.stdout

    def load_config(self, path: Optional[str], overrides: Dict[str, str]) -> Tuple[bool, str]:
        """Replace the active configuration; file values are overridden by ``overrides``."""
        try:
            if path:
                self.config = load_config(Path(path), overrides)
            else:
                self.config = build_config(overrides)
        except ConfigError as e:
            return False, str(e)
        return True, f"Configuration ready: weights {list(self.config.weights)}, preset {self.config.metric_preset}."

    def emit(self, columns: Sequence[str], table: List[Dict[str, object]], series=None, title: str = '') -> bool:
        # No output path: the table goes to stdout
        if not self.config.out:
            self.stdout.write(render_csv(columns, table))
        ok, messages = write_outputs(self.writer, columns, table, self.config.out, self.config.svg, series, title)
        for message in messages:
            logger.info(message)
        if not ok:
            print('\n'.join(messages), file=sys.stderr)
        return ok

    def coeffs(self) -> bool:
        config = self.config
        sphere = config.sphere()
        table = []
        targets = []
        user = config.user_chart
        if user is not None:
            targets.append(('user', user.center, user))
        else:
            for label, x in resolve_points(config, sphere):
                targets.append((label, x, None))
        for label, x, chart in targets:
            # one engine per chart, shared by the report and the coefficients
            if chart is None:
                chart = sphere.brt_chart_at(x)
                engine = CurvatureEngine(chart, config.metric_preset != 'levi')
                coeffs = coefficients_at(chart, chart.center, config.metric_preset, engine=engine)
            else:
                preset = config.metric_preset if chart.metric_gram is not None else 'levi'
                engine = CurvatureEngine(chart, preset != 'levi')
                coeffs = coefficients_at(chart, chart.center, preset, engine=engine)
            report = engine.report(chart.center)
            row = {'point': label, 'x': x, **report.row()}
            row.update(zip(('b0', 'b1', 'b2'), coeffs.as_tuple()))
            table.append(row)
        return self.emit(REPORT_COLUMNS, table)

    def kernel(self) -> bool:
        config = self.config
        sphere = config.sphere()
        points = resolve_points(config, sphere)
        items = [(label, x, m) for label, x in points for m in config.m_list(EXPANSION_M_VALUES)]
        values = ordered_map(lambda item: sphere.szego_value(item[2], item[1]), items, config.threads)
        table = [{'point': label, 'x': x, 'r': sphere.stratum_of(x), 'm': m, 'S_m': value}
                 for (label, x, m), value in zip(items, values)]
        return self.emit(KERNEL_COLUMNS, table)

    def expansion(self) -> bool:
        report = run_expansion(self.config)
        written = self.emit(EXPANSION_COLUMNS, report.table(), residual_series(report.rows),
                            title=f"residual, N={report.N}")
        for label, fit in report.fitted.items():
            if fit is not None:
                logger.info("fitted coefficients at %s: %s", label, ', '.join(f"{b:.12g}" for b in fit))
        return written and report.passed

    def decay(self) -> bool:
        report = decay_scan(self.config)
        written = self.emit(DECAY_COLUMNS, report.table(), residual_series(report.rows),
                            title='residual near the singular stratum')
        if self.config.out:
            base = Path(self.config.out)
            # Side tables next to the main one
            for suffix, columns, table in (('gradient', GRADIENT_COLUMNS, [r.row() for r in report.gradient_rows]),
                                           ('distances', EQUIVALENCE_COLUMNS, report.equivalence)):
                ok, message = self.writer.write_csv(base.with_name(f"{base.stem}_{suffix}{base.suffix}"),
                                                    columns, table)
                written &= ok
                logger.info(message)
        print(f"fitted decay rate: {report.epsilon if report.epsilon is not None else 'n/a'}", file=sys.stderr)
        return written and report.passed

    def checks(self) -> bool:
        results = run_checks(self.config)
        for result in results:
            self.stdout.write(result.line() + '\n')
        passed = all(result.passed for result in results)
        self.stdout.write(f"{sum(r.passed for r in results)}/{len(results)} checks passed\n")
        return passed

    def demo(self, p: Sequence[int], z: Sequence[complex], order: Optional[int] = None) -> bool:
        config = self.config
        n = len(z)
        results = [oscillatory_demo(n, p, z, m, order=order, delta=config.delta,
                                    tolerance=config.tolerances['aliasing'])
                   for m in config.m_list(DEMO_M_VALUES)]
        passed = all(r.passed for r in results)
        return self.emit(DEMO_COLUMNS, [r.row() for r in results]) and passed


def configure_logging(log_dir: Optional[Path] = None, verbose: bool = False) -> None:
    root = logging.getLogger('szego_toolkit')
    root.setLevel(logging.DEBUG)
    formatter = logging.Formatter('%(asctime)s %(levelname)s %(name)s: %(message)s')
    # File log at INFO, once per process
    if log_dir is not None and not any(isinstance(h, logging.FileHandler) for h in root.handlers):
        handler = logging.FileHandler(log_dir / 'szego.log', encoding='utf-8')
        handler.setLevel(logging.INFO)
        handler.setFormatter(formatter)
        root.addHandler(handler)
    # FileHandler subclasses StreamHandler, so match the exact type
    if verbose and not any(type(h) is logging.StreamHandler for h in root.handlers):
        stream = logging.StreamHandler(sys.stderr)
        stream.setLevel(logging.DEBUG)
        stream.setFormatter(formatter)
        root.addHandler(stream)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='key = value configuration file')
    common.add_argument('--model', help="weighted_sphere, s3 or s5")
    common.add_argument('--weights', help='comma-separated weights p_1,...,p_{n+1}')
    common.add_argument('--n', help='complex dimension of the CR structure')
    common.add_argument('--metric', dest='metric_preset', help='levi or ambient-round')
    common.add_argument('--m', dest='m_range', help='start:step:stop or a comma-separated list')
    common.add_argument('--points', help='stratum, regular, grid, random or explicit')
    common.add_argument('--point-list', dest='point_list', help='explicit points, ";"-separated')
    common.add_argument('--grid', help='lo:hi:count along |z1|')
    common.add_argument('--N', help='truncation order (1..3)')
    common.add_argument('--delta', help='window parameter of d_hat')
    common.add_argument('--out', help='CSV output path (stdout when omitted)')
    common.add_argument('--svg', help='SVG plot output path')
    common.add_argument('--threads', help='worker threads')
    common.add_argument('--seed', help='random seed')
    common.add_argument('--verbose', action='store_true', help='debug logging on stderr')

    parser = argparse.ArgumentParser(prog='szego', description='Szego kernel Fourier component experiments.',
                                     epilog=f"configuration keys: {config_keys_help()}")
    sub = parser.add_subparsers(dest='command', required=True)
    sub.add_parser('coeffs', parents=[common], help='curvature report and b0, b1, b2 per point')
    sub.add_parser('kernel', parents=[common], help='exact S_m table')
    sub.add_parser('expansion', parents=[common], help='S_m against the truncated expansion')
    sub.add_parser('decay', parents=[common], help='exponential decay near the singular strata')
    sub.add_parser('checks', parents=[common], help='run the invariant suite')
    demo = sub.add_parser('demo', parents=[common], help='circle Fourier modes of the Bargmann-Fock kernel')
    demo.add_argument('--p', default='1', help='rotation weights, one per coordinate or a single integer')
    demo.add_argument('--z', default=None, help='base point, comma-separated complex coordinates')
    demo.add_argument('--order', type=int, default=None, help='trapezoid nodes (automatic when omitted)')
    return parser


_OVERRIDE_KEYS = ('model', 'weights', 'n', 'metric_preset', 'm_range', 'points', 'point_list', 'grid', 'N',
                  'delta', 'out', 'svg', 'threads', 'seed')


def cli(argv: Optional[Sequence[str]] = None, log_dir: Optional[Path] = None, stdout=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    configure_logging(log_dir, args.verbose)

    # Flags given on the command line override the file
    overrides = {key: getattr(args, key) for key in _OVERRIDE_KEYS if getattr(args, key) is not None}
    bench = Workbench(stdout=stdout)
    ok, message = bench.load_config(args.config, overrides)
    if not ok:
        print(f"configuration error: {message}", file=sys.stderr)
        return EXIT_USAGE
    logger.info(message)

    try:
        if args.command == 'demo':
            p = parse_int_list(args.p)
            # default base point: |z|^2 = 1/2 spread evenly
            if args.z is None:
                n = len(p) if len(p) > 1 else bench.config.n
                z = (complex((0.5 / n) ** 0.5),) * n
            else:
                z = parse_points(args.z)[0]
            if len(p) == 1:
                p = p * len(z)
            passed = bench.demo(p, z, args.order)
        else:
            passed = getattr(bench, args.command)()
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SzegoError as e:
        logger.error("%s failed: %s: %s", args.command, type(e).__name__, e)
        print(f"{args.command} failed: {e}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except ValueError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def start():
    """The application entry point defined in pyproject.toml."""
    # User data should be stored in a consistent, user-owned location.
    app_data_dir = Path.home() / ".config" / "szego_toolkit"
    for dir_name in ["config", "logs"]:
        (app_data_dir / dir_name).mkdir(parents=True, exist_ok=True)
    log_dir = app_data_dir / "logs"

    try:
        code = cli(sys.argv[1:], log_dir=log_dir)
    except Exception as e:
        print("--- szego failed ---", file=sys.stderr)
        print(f"ERROR: {e}", file=sys.stderr)
        with open(log_dir / "runtime_error.log", "w") as f:
            f.write(f"Timestamp: {datetime.now()}\n")
            traceback.print_exc(file=f)
        code = EXIT_CHECK_FAILED
    sys.exit(code)
