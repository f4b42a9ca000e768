"""
Back end of the management commands: SNR axis parsing, per-point row
builders, sweep fan-out, and the CSV and gnuplot writers.

A sweep point is one (SNR, K) pair. Each report has a fixed column
tuple; row builders return lists in that order and only JSON-friendly
values, so a point can be evaluated on a Celery worker.
"""

import csv
import io
import logging
import math
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, TextIO, Tuple

from core.exceptions import HarqAnalysisError, SeriesUnstable
from core.schemas.data_models import (
    ChannelSpec,
    HarqScheme,
    OptimizationMode,
    OptimizationProblem,
    OutageMethod,
    RoundGeometry,
    SimConfig,
    SweepSpec,
)
from core.services import harq_core, mc_sim, optimizer
from core.services.dispatch import run_jobs
from core.services.outage import default_eps_grid, estimate_outage, estimate_outages, outage_table

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 12
LIST_SEPARATOR = ';'
# K values of the throughput-gain and delay-threshold panels when --k is absent
PANEL_NATS = (300.0, 600.0)

OUTAGE_ESTIMATORS = ('omega_oracle', 'omega_high_snr', 'omega_linearized', 'v_m', 'u_m', 'eps_star')

COLUMNS: Dict[str, Tuple[str, ...]] = {
    'outage': ('snr_db', 'm') + OUTAGE_ESTIMATORS + ('k', 'cumulative_length'),
    'throughput': (
        'snr_db', 'k', 'lengths', 'df', 'd', 'method',
        'eta', 'outage', 'expected_uses', 'expected_nats',
    ),
    'openloop': ('snr_db', 'k', 'length', 'method', 'omega', 'eta'),
    'optimize': (
        'snr_db', 'mode', 'df', 'k', 'lengths', 'eta', 'outage', 'expected_uses',
    ),
    'fig1a': (
        'snr_db', 'k', 'df',
        'eta_variable', 'eta_fixed',
        'eta_variable_high_snr', 'eta_variable_linearized',
        'eta_fixed_high_snr', 'eta_fixed_linearized',
        'eta_variable_mc', 'eta_variable_mc_half_width',
        'k_variable', 'lengths_variable', 'k_fixed', 'lengths_fixed',
    ),
    'fig1b': (
        'snr_db', 'k', 'df', 'gain_percent', 'eta', 'eta_open_loop',
        'lengths', 'open_loop_length',
    ),
    'delay_threshold': (
        'snr_db', 'k', 'r', 'r_lower', 'r_upper', 'r_linearized',
        'open_loop_eta', 'open_loop_length', 'lengths',
    ),
    'simulate': (
        'snr_db', 'k', 'lengths', 'df', 'packets', 'seed',
        'eta_mc', 'eta_mc_half_width', 'eta_analytic',
        'expected_uses_mc', 'expected_uses_mc_half_width', 'expected_uses_analytic',
        'decoded_at', 'outages', 'omegas_mc', 'omega_mc_half_widths', 'omegas_analytic',
    ),
}
COLUMNS['fig1c'] = COLUMNS['delay_threshold']


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def parse_snr_axis(text: str) -> Tuple[float, ...]:
    """
    '10' -> (10,), '0:20:2' -> (0, 2, .., 20) with the stop included when
    it lies on the grid, '0,5,12' -> (0, 5, 12).
    """
    text = str(text).strip()
    if not text:
        raise ValueError('empty SNR axis')
    if ':' in text:
        parts = text.split(':')
        if len(parts) != 3:
            raise ValueError(f"SNR range must be start:stop:step, got '{text}'")
        start, stop, step = (float(p) for p in parts)
        if not step > 0:
            raise ValueError(f'SNR step must be positive, got {step:g}')
        if stop < start:
            raise ValueError(f'SNR range is empty: {text}')
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 10) for i in range(count))
    return tuple(float(p) for p in text.split(','))


def parse_lengths(text: str) -> Optional[Tuple[int, ...]]:
    """'300,300' -> (300, 300); 'optimize' -> None."""
    text = str(text).strip()
    if text.lower() == 'optimize':
        return None
    try:
        return tuple(int(p) for p in text.split(','))
    except ValueError:
        raise ValueError(f"lengths must be a comma list of integers or 'optimize', got '{text}'")


# ---------------------------------------------------------------------------
# Row builders
# ---------------------------------------------------------------------------

def _eps_grid(sweep: SweepSpec) -> Tuple[float, ...]:
    return default_eps_grid(sweep.eps_points, *sweep.eps_range)


def _estimator_options(sweep: SweepSpec) -> Dict[str, Any]:
    return {'tol': sweep.oracle_tol, 'series_tol': sweep.series_tol, 'eps_grid': _eps_grid(sweep)}


def _problem(sweep: SweepSpec, spec: ChannelSpec, nats: Optional[float], mode: OptimizationMode) -> OptimizationProblem:
    rounds = sweep.rounds
    return OptimizationProblem(
        spec=spec,
        max_rounds=rounds,
        mode=mode,
        relative_delay=sweep.delay_fraction,
        nats_range=(nats, nats) if nats is not None else sweep.nats_range,
        length_range=(sweep.min_subcodeword_length * rounds, sweep.length_max),
        min_subcodeword_length=sweep.min_subcodeword_length,
        final_estimator=sweep.method,
    )


def _search_options(sweep: SweepSpec) -> Dict[str, Any]:
    return {
        'length_range': (sweep.min_subcodeword_length * sweep.rounds, sweep.length_max),
        'min_subcodeword_length': sweep.min_subcodeword_length,
    }


def _fixed_then_variable(sweep: SweepSpec, spec: ChannelSpec, nats: Optional[float]):
    """Fixed-length optimum, then the variable-length search seeded with it."""
    fixed = optimizer.optimize_throughput(_problem(sweep, spec, nats, OptimizationMode.FIXED_LENGTH))
    variable = optimizer.optimize_throughput(
        _problem(sweep, spec, nats, OptimizationMode.VARIABLE_LENGTH), seeds=[fixed[0]]
    )
    return fixed, variable


def _eta_or_none(scheme: HarqScheme, spec: ChannelSpec, method: OutageMethod, sweep: SweepSpec) -> Optional[float]:
    try:
        omegas = estimate_outages(scheme, spec, method, **_estimator_options(sweep))
        return harq_core.throughput(scheme, omegas).eta
    except SeriesUnstable as exc:
        logger.warning(f'{method.value} throughput unavailable at P={spec.snr:.6g}: {exc}')
        return None


def outage_rows(sweep: SweepSpec, snr_db: float, nats: Optional[float], options: Dict[str, Any]) -> List[list]:
    spec = ChannelSpec.from_db(snr_db)
    scheme = sweep.scheme(nats)
    rows = []
    for m, geom in enumerate(scheme.geometries(), start=1):
        table = outage_table(geom, spec, tol=sweep.oracle_tol, eps_grid=_eps_grid(sweep))
        rows.append(
            [snr_db, m] + [table[name] for name in OUTAGE_ESTIMATORS] + [nats, geom.cumulative_length]
        )
    return rows


def throughput_rows(sweep: SweepSpec, snr_db: float, nats: Optional[float], options: Dict[str, Any]) -> List[list]:
    spec = ChannelSpec.from_db(snr_db)
    scheme = sweep.scheme(nats)
    omegas = estimate_outages(scheme, spec, sweep.method, **_estimator_options(sweep))
    report = harq_core.throughput(scheme, omegas)
    return [[
        snr_db, nats, scheme.lengths, scheme.relative_delay, scheme.feedback_delay,
        sweep.method.value, report.eta, report.outage, report.expected_uses, report.expected_nats,
    ]]


def openloop_rows(sweep: SweepSpec, snr_db: float, nats: Optional[float], options: Dict[str, Any]) -> List[list]:
    spec = ChannelSpec.from_db(snr_db)
    if sweep.lengths is not None:
        length = sum(sweep.lengths)
        geom = RoundGeometry(cumulative_length=length, nats=nats)
        omega = estimate_outage(geom, spec, sweep.method, **_estimator_options(sweep)).value
        eta = harq_core.open_loop_throughput(length, nats, omega)
        return [[snr_db, nats, length, sweep.method.value, omega, eta]]

    problem = OptimizationProblem(
        spec=spec,
        max_rounds=1,
        mode=OptimizationMode.OPEN_LOOP,
        nats_range=(nats, nats) if nats is not None else sweep.nats_range,
        length_range=(sweep.min_subcodeword_length, sweep.length_max),
        min_subcodeword_length=sweep.min_subcodeword_length,
        final_estimator=sweep.method,
    )
    scheme, report = optimizer.optimize_throughput(problem)
    return [[snr_db, scheme.nats, scheme.total_length, sweep.method.value, report.outage, report.eta]]


def optimize_rows(sweep: SweepSpec, snr_db: float, nats: Optional[float], options: Dict[str, Any]) -> List[list]:
    spec = ChannelSpec.from_db(snr_db)
    mode = OptimizationMode(options['mode'])
    if mode == OptimizationMode.VARIABLE_LENGTH:
        _, (scheme, report) = _fixed_then_variable(sweep, spec, nats)
    else:
        scheme, report = optimizer.optimize_throughput(_problem(sweep, spec, nats, mode))
    return [[
        snr_db, mode.value, sweep.delay_fraction, scheme.nats, scheme.lengths,
        report.eta, report.outage, report.expected_uses,
    ]]


def fig1a_rows(sweep: SweepSpec, snr_db: float, nats: Optional[float], options: Dict[str, Any]) -> List[list]:
    spec = ChannelSpec.from_db(snr_db)
    (fixed, fixed_report), (variable, variable_report) = _fixed_then_variable(sweep, spec, nats)

    eta_mc = half_width = None
    if sweep.packets > 0:
        config = SimConfig(scheme=variable, spec=spec, packets=sweep.packets, seed=sweep.seed)
        stats = mc_sim.simulate(config, fan_out=False)
        eta_mc, half_width = stats.throughput, stats.throughput_half_width

    return [[
        snr_db, nats, sweep.delay_fraction,
        variable_report.eta, fixed_report.eta,
        _eta_or_none(variable, spec, OutageMethod.HIGH_SNR, sweep),
        _eta_or_none(variable, spec, OutageMethod.LINEARIZED, sweep),
        _eta_or_none(fixed, spec, OutageMethod.HIGH_SNR, sweep),
        _eta_or_none(fixed, spec, OutageMethod.LINEARIZED, sweep),
        eta_mc, half_width,
        variable.nats, variable.lengths, fixed.nats, fixed.lengths,
    ]]


def fig1b_rows(sweep: SweepSpec, snr_db: float, nats: Optional[float], options: Dict[str, Any]) -> List[list]:
    spec = ChannelSpec.from_db(snr_db)
    gain = optimizer.throughput_gain(
        spec, sweep.rounds, sweep.delay_fraction, nats,
        final_estimator=sweep.method, **_search_options(sweep),
    )
    return [[
        snr_db, nats, sweep.delay_fraction, gain.gain_percent, gain.eta, gain.eta_open_loop,
        gain.scheme.lengths, gain.open_loop_scheme.total_length,
    ]]


def delay_threshold_rows(sweep: SweepSpec, snr_db: float, nats: Optional[float], options: Dict[str, Any]) -> List[list]:
    spec = ChannelSpec.from_db(snr_db)
    report = optimizer.delay_threshold(
        spec, sweep.rounds, nats,
        estimator=sweep.method, eps_grid=_eps_grid(sweep), **_search_options(sweep),
    )
    return [[
        snr_db, nats, report.r, report.r_lower, report.r_upper, report.r_linearized,
        report.open_loop_eta, report.scheme.total_length, report.scheme.lengths,
    ]]


def simulate_rows(sweep: SweepSpec, snr_db: float, nats: Optional[float], options: Dict[str, Any]) -> List[list]:
    spec = ChannelSpec.from_db(snr_db)
    scheme = sweep.scheme(nats)
    config = SimConfig(
        scheme=scheme, spec=spec, packets=sweep.packets, seed=sweep.seed, workers=sweep.workers
    )
    stats = mc_sim.simulate(config)
    omegas = estimate_outages(scheme, spec, OutageMethod.ORACLE, **_estimator_options(sweep))
    analytic = harq_core.throughput(scheme, omegas)
    return [[
        snr_db, nats, scheme.lengths, scheme.relative_delay, stats.packets, stats.seed,
        stats.throughput, stats.throughput_half_width, analytic.eta,
        stats.expected_uses, stats.expected_uses_half_width, analytic.expected_uses,
        stats.decoded_at, stats.outages, stats.omegas, stats.omega_half_widths, omegas.values,
    ]]


ROW_BUILDERS: Dict[str, Callable[[SweepSpec, float, Optional[float], Dict[str, Any]], List[list]]] = {
    'outage': outage_rows,
    'throughput': throughput_rows,
    'openloop': openloop_rows,
    'optimize': optimize_rows,
    'fig1a': fig1a_rows,
    'fig1b': fig1b_rows,
    'fig1c': delay_threshold_rows,
    'delay_threshold': delay_threshold_rows,
    'simulate': simulate_rows,
}


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def point_label(snr_db: float, nats: Optional[float]) -> str:
    label = f'snr_db={snr_db:g}'
    if nats is not None:
        label += f', K={nats:g}'
    return label


def sweep_points(sweep: SweepSpec) -> List[Tuple[float, Optional[float]]]:
    """(SNR, K) pairs ordered by the SNR axis, then by K as given."""
    nats: Sequence[Optional[float]] = sweep.nats or (None,)
    return [(snr_db, k) for snr_db in sweep.snr_db for k in nats]


def evaluate_point(report: str, sweep: SweepSpec, snr_db: float, nats: Optional[float], options: Dict[str, Any]) -> List[list]:
    """Rows of one sweep point; numerical failures are re-raised naming the point."""
    try:
        return ROW_BUILDERS[report](sweep, snr_db, nats, options)
    except HarqAnalysisError as exc:
        raise type(exc)(f'{point_label(snr_db, nats)}: {exc}') from exc


def sweep_point_job(payload: Dict[str, Any]) -> List[list]:
    return evaluate_point(
        payload['report'],
        SweepSpec.model_validate(payload['sweep']),
        payload['snr_db'],
        payload['nats'],
        payload.get('options', {}),
    )


def run_sweep(
    report: str,
    sweep: SweepSpec,
    options: Optional[Dict[str, Any]] = None,
    fan_out: bool = True,
) -> List[list]:
    """
    All rows of a report in sweep-axis order. With fan_out the points are
    spread over sweep.workers (or Celery); otherwise they run here in turn.
    """
    options = dict(options or {})
    points = sweep_points(sweep)
    logger.info(f'{report}: {len(points)} sweep point(s)')
    if not fan_out:
        results = [evaluate_point(report, sweep, snr_db, k, options) for snr_db, k in points]
    else:
        sweep_json = sweep.model_dump(mode='json')
        payloads = [
            {'report': report, 'sweep': sweep_json, 'snr_db': snr_db, 'nats': k, 'options': options}
            for snr_db, k in points
        ]
        results = run_jobs('sweep_point', payloads, workers=sweep.workers)
    return [row for rows in results for row in rows]


# ---------------------------------------------------------------------------
# Writers
# ---------------------------------------------------------------------------

def format_field(value: Any) -> str:
    """12 significant digits; None and non-finite numbers become empty fields."""
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            return ''
        return format(value, f'.{SIGNIFICANT_DIGITS}g')
    if isinstance(value, (list, tuple)):
        return LIST_SEPARATOR.join(format_field(v) for v in value)
    return str(value)


def config_lines(command: str, settings_used: Dict[str, Any]) -> List[str]:
    lines = [f'# harqfbl {command}']
    for key, value in settings_used.items():
        lines.append(f'# {key}={format_field(value)}')
    return lines


def write_csv(
    stream: TextIO,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    comments: Sequence[str] = (),
) -> None:
    """RFC-4180 CSV (CRLF line ends) with '#' comment lines above the header."""
    for line in comments:
        stream.write(line + '\r\n')
    writer = csv.writer(stream, lineterminator='\r\n')
    writer.writerow(columns)
    for index, row in enumerate(rows):
        if len(row) != len(columns):
            raise ValueError(f'row {index} has {len(row)} fields, expected {len(columns)}')
        for name, value in zip(columns, row):
            if isinstance(value, float) and not math.isfinite(value):
                logger.warning(f"row {index}: non-finite {name} written as an empty field")
        writer.writerow([format_field(value) for value in row])


def render_csv(columns: Sequence[str], rows: Iterable[Sequence[Any]], comments: Sequence[str] = ()) -> str:
    buffer = io.StringIO()
    write_csv(buffer, columns, rows, comments)
    return buffer.getvalue()


PANELS: Dict[str, Dict[str, Any]] = {
    'fig1a': {
        'ylabel': 'Throughput [npcu]',
        'curves': [
            ('eta_variable', 'variable-length INR'),
            ('eta_fixed', 'fixed-length INR'),
            ('eta_variable_high_snr', 'variable-length, high-SNR approximation'),
            ('eta_variable_linearized', 'variable-length, linearized approximation'),
            ('eta_variable_mc', 'variable-length, simulation'),
        ],
    },
    'fig1b': {
        'ylabel': 'Throughput gain [%]',
        'curves': [('gain_percent', 'gain')],
    },
    'fig1c': {
        'ylabel': 'Relative feedback delay',
        'curves': [('r', 'r'), ('r_lower', 'lower bound'), ('r_upper', 'upper bound')],
    },
}


def gnuplot_script(panel: str, csv_path: str, nats: Sequence[float] = ()) -> str:
    """Gnuplot script plotting a panel CSV; one curve family per K when K was fixed."""
    spec = PANELS[panel]
    columns = COLUMNS[panel]
    k_column = columns.index('k') + 1
    csv_name = Path(csv_path).name
    image = Path(csv_name).with_suffix('.png').name

    plots = []
    for name, title in spec['curves']:
        column = columns.index(name) + 1
        if nats:
            for k in nats:
                k_text = format_field(float(k))
                plots.append(
                    f"'{csv_name}' using 1:(${k_column}=={k_text} ? ${column} : 1/0) "
                    f"with linespoints title '{title}, K={k_text}'"
                )
        else:
            plots.append(f"'{csv_name}' using 1:{column} with linespoints title '{title}'")

    lines = [
        f'# {panel} panel from {csv_name}; run: gnuplot {Path(csv_name).with_suffix(".gp").name}',
        "set datafile separator ','",
        "set datafile commentschars '#'",
        'set key autotitle columnheader',
        'set terminal pngcairo size 800,600',
        f"set output '{image}'",
        "set xlabel 'SNR [dB]'",
        f"set ylabel '{spec['ylabel']}'",
        'set grid',
        'plot ' + ', \\\n     '.join(plots),
    ]
    return '\n'.join(lines) + '\n'


def write_gnuplot(panel: str, csv_path: str, nats: Sequence[float] = ()) -> Path:
    """Write <csv stem>.gp next to the CSV and return its path."""
    script_path = Path(csv_path).with_suffix('.gp')
    script_path.write_text(gnuplot_script(panel, csv_path, nats))
    return script_path
