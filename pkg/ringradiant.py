#!/usr/bin/env python3
"""
Ring radiation experiment runner
Verification suites, radius sweeps of cycle-integrated radiated power,
point field evaluation and Wallis tables from the command line
"""

import argparse
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import duckdb
import numpy as np
import pandas as pd
import scipy
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

import flow_extension
import jefimenko_fields
import radiation_analysis
import spectral_wave
from errors import ConfigError, InputDomainError, RingRadiantError
from jefimenko_fields import EvalPoint, causal_fields_direct, far_field_fields
from radiation_analysis import FAR_FIELD_PARTS, CycleRecord, cycle_power, decay_fit, rescaled_source
from spectral_wave import ModeWeights, combined_source
from verification import SUITES, run_verify, wallis_frame

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

CSV_COLUMNS = ['radius', 't0', 'period', 'P_E2xB2', 'P_E3xB2', 'P_other', 'cycle_integral']
LIST_KEYS = ('weights', 'radii')
THREADS_ENV = 'RINGRADIANT_THREADS'
DB_TABLE = 'cycle_records'


class ExperimentConfig(BaseModel):
    """Validated experiment parameters; numeric defaults mirror the module defaults."""
    model_config = ConfigDict(frozen=True, extra='forbid')

    m: int = 2
    c: float = 10.0
    weights: Tuple[float, float, float, float] = (1.0, 1.0, 1.0, -1.0)
    radii: Tuple[float, ...] = (5.0, 10.0, 20.0, 40.0)
    t0: float = 0.0
    theta_nodes: int = 4096
    phi_nodes: int = 64
    sphere_theta_nodes: int = 128
    time_nodes: int = 128
    mode: Literal['direct', 'far_field'] = 'far_field'
    output_format: Literal['csv', 'json'] = 'csv'
    wave_speed: float = 1.0

    @field_validator('m')
    @classmethod
    def check_mode_number(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"mode number must be >= 1, got {v}")
        return v

    @field_validator('c')
    @classmethod
    def check_signal_speed(cls, v: float) -> float:
        if not np.isfinite(v) or v <= 1.0:
            raise ValueError(f"c must be a finite value above 1, got {v}")
        return v

    @field_validator('weights')
    @classmethod
    def check_weights(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if not np.all(np.isfinite(v)):
            raise ValueError(f"weights must be finite, got {v}")
        return v

    @field_validator('radii')
    @classmethod
    def check_radii(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if not v:
            raise ValueError("radii must not be empty")
        if any(r <= 1.0 or not np.isfinite(r) for r in v):
            raise ValueError(f"radii must be finite and > 1, got {v}")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError(f"radii must be strictly increasing, got {v}")
        return v

    @field_validator('theta_nodes', 'phi_nodes', 'sphere_theta_nodes', 'time_nodes')
    @classmethod
    def check_nodes(cls, v: int) -> int:
        if v < 16 or v & (v - 1):
            raise ValueError(f"node counts must be powers of two >= 16, got {v}")
        return v

    @field_validator('wave_speed')
    @classmethod
    def check_wave_speed(cls, v: float) -> float:
        if not np.isfinite(v) or v <= 0.0:
            raise ValueError(f"wave speed must be positive, got {v}")
        return v

    @property
    def config_hash(self) -> str:
        canonical = json.dumps(self.model_dump(mode='json'), sort_keys=True)
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()

    @property
    def mode_weights(self) -> ModeWeights:
        return ModeWeights(self.m, *self.weights)


def parse_config_text(text: str) -> Dict[str, object]:
    """
    Parse `key = value` lines. `#` starts a comment; weights and radii are
    comma-separated lists.
    """
    values: Dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got '{raw.strip()}'")
        key, value = (part.strip() for part in line.split('=', 1))
        if not key:
            raise ConfigError(f"line {lineno}: missing key")
        if key in LIST_KEYS:
            values[key] = [item.strip() for item in value.split(',') if item.strip()]
        else:
            values[key] = value
    return values


def load_config(path: Optional[str] = None, overrides: Optional[Dict[str, object]] = None) -> ExperimentConfig:
    """
    Build an ExperimentConfig from an optional key=value file and CLI overrides.

    Raises:
        ConfigError: unreadable file, malformed line or failed validation
    """
    values: Dict[str, object] = {}
    if path is not None:
        try:
            with open(path, 'r', encoding='utf-8') as f:
                values.update(parse_config_text(f.read()))
        except OSError as e:
            raise ConfigError(f"cannot read config file {path}: {e}") from e
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return ExperimentConfig(**values)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}") from e


def worker_count(default: Optional[int] = None) -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return default or os.cpu_count() or 1
    try:
        count = int(raw)
    except ValueError as e:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got '{raw}'") from e
    if count < 1:
        raise ConfigError(f"{THREADS_ENV} must be positive, got {count}")
    return count


@dataclass
class SweepResult:
    config: ExperimentConfig
    rows: List[Dict[str, object]] = field(default_factory=list)
    records: List[CycleRecord] = field(default_factory=list)
    fit: Optional[Tuple[float, float]] = None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=CSV_COLUMNS + ['error'])


class RadiationSweeper:
    """Cycle-integrated power over the configured radii, one worker task per radius."""

    def __init__(self, config: ExperimentConfig, max_workers: Optional[int] = None):
        self.config = config
        self.max_workers = max_workers or worker_count()
        self.weights = config.mode_weights
        self.source = (rescaled_source(self.weights, config.wave_speed)
                       if config.wave_speed != 1.0 else combined_source(self.weights))

    def evaluate_radius(self, radius: float) -> Tuple[Dict[str, object], Optional[CycleRecord]]:
        cfg = self.config
        row: Dict[str, object] = {name: np.nan for name in CSV_COLUMNS}
        row.update(radius=radius, t0=cfg.t0, error='')
        try:
            record = cycle_power(self.weights, radius, cfg.t0, cfg.c, cfg.time_nodes, cfg.mode,
                                 source=self.source, wave_speed=cfg.wave_speed,
                                 theta_nodes=cfg.theta_nodes, nodes_phi=cfg.phi_nodes,
                                 nodes_theta=cfg.sphere_theta_nodes)
        except (RingRadiantError, ArithmeticError) as e:
            logger.error(f"Radius {radius}: {type(e).__name__}: {e}")
            row['error'] = f"{type(e).__name__}: {e}"
            return row, None

        other = [v for k, v in record.parts.items() if k not in FAR_FIELD_PARTS]
        row.update(period=record.period,
                   P_E2xB2=record.parts.get('E2xB2', np.nan),
                   P_E3xB2=record.parts.get('E3xB2', np.nan),
                   P_other=float(sum(other)) if other else np.nan,
                   cycle_integral=record.integral)
        logger.info(f"Radius {radius}: cycle integral {record.integral:.6e}")
        return row, record

    def run_sweep(self) -> SweepResult:
        cfg = self.config
        logger.info(f"Sweeping {len(cfg.radii)} radii with weights {cfg.weights}, m={cfg.m}, "
                    f"c={cfg.c}, mode={cfg.mode} on {self.max_workers} workers")
        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            outcomes = list(executor.map(self.evaluate_radius, cfg.radii))

        result = SweepResult(cfg)
        for row, record in outcomes:
            result.rows.append(row)
            if record is not None:
                result.records.append(record)

        if len(result.records) >= 3:
            result.fit = decay_fit(result.records)
        else:
            logger.warning(f"Only {len(result.records)} radii succeeded; no decay fit")

        logger.info("\n=== SWEEP RESULTS ===")
        logger.info(f"Radii evaluated: {len(result.records)}/{len(cfg.radii)}")
        if result.fit is not None:
            logger.info(f"Decay exponent: {result.fit[0]:.4f}")
            logger.info(f"Amplitude: {result.fit[1]:.6e}")
        return result


def run_sweep(config: ExperimentConfig) -> SweepResult:
    return RadiationSweeper(config).run_sweep()


# --- output -----------------------------------------------------------------

def _fmt(value) -> str:
    if value is None or (isinstance(value, float) and np.isnan(value)):
        return ''
    return format(float(value), '.17g')


def _json_number(value):
    if value is None or not np.isfinite(value):
        return None
    return float(value)


def sweep_to_csv(result: SweepResult) -> str:
    lines = [{name: _fmt(row[name]) for name in CSV_COLUMNS} for row in result.rows]
    if result.fit is not None:
        exponent, amplitude = result.fit
        fit_row = {name: '' for name in CSV_COLUMNS}
        fit_row.update(radius='fit', t0=_fmt(result.config.t0), period=_fmt(exponent),
                       cycle_integral=_fmt(amplitude))
        lines.append(fit_row)
    return pd.DataFrame(lines, columns=CSV_COLUMNS).to_csv(index=False, lineterminator='\n')


def run_metadata(config: ExperimentConfig) -> Dict[str, object]:
    return {
        'config_hash': config.config_hash,
        'config': config.model_dump(mode='json'),
        'versions': {
            'spectral_wave': spectral_wave.__version__,
            'flow_extension': flow_extension.__version__,
            'jefimenko_fields': jefimenko_fields.__version__,
            'radiation_analysis': radiation_analysis.__version__,
            'numpy': np.__version__,
            'scipy': scipy.__version__,
            'pandas': pd.__version__,
        },
    }


def sweep_to_json(result: SweepResult) -> str:
    records = []
    for row in result.rows:
        entry = {name: _json_number(row[name]) for name in CSV_COLUMNS}
        entry['error'] = row['error'] or None
        records.append(entry)
    fit = None
    if result.fit is not None:
        fit = {'exponent': _json_number(result.fit[0]), 'amplitude': _json_number(result.fit[1])}
    document = {'metadata': run_metadata(result.config), 'records': records, 'fit': fit}
    return json.dumps(document, sort_keys=True, indent=2) + '\n'


def frame_output(df: pd.DataFrame, output_format: str, config: ExperimentConfig) -> str:
    if output_format == 'json':
        document = {'metadata': run_metadata(config),
                    'rows': json.loads(df.to_json(orient='records', double_precision=15))}
        return json.dumps(document, sort_keys=True, indent=2) + '\n'
    return df.to_csv(index=False, lineterminator='\n', float_format='%.17g')


def persist_sweep(result: SweepResult, db_path: str) -> int:
    """Append the sweep rows to the cycle_records table of a DuckDB file."""
    df = result.to_frame()
    df.insert(0, 'config_hash', result.config.config_hash)
    connection = duckdb.connect(db_path)
    try:
        connection.execute(f"""
        CREATE TABLE IF NOT EXISTS {DB_TABLE} (
            config_hash VARCHAR,
            radius DOUBLE,
            t0 DOUBLE,
            period DOUBLE,
            P_E2xB2 DOUBLE,
            P_E3xB2 DOUBLE,
            P_other DOUBLE,
            cycle_integral DOUBLE,
            error VARCHAR
        )
        """)
        columns_str = ', '.join(df.columns)
        connection.execute(f"INSERT INTO {DB_TABLE} ({columns_str}) SELECT {columns_str} FROM df")
        logger.info(f"Inserted {len(df)} rows into {DB_TABLE} at {db_path}")
    finally:
        connection.close()
    return len(df)


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        logger.info(f"Results saved to {out}")
    else:
        sys.stdout.write(text)


# --- subcommands --------------------------------------------------------------

def parse_point(text: str) -> Tuple[Tuple[float, float, float], float]:
    try:
        values = [float(v) for v in text.split(',')]
    except ValueError as e:
        raise ConfigError(f"--at expects x,y,z,t numbers, got '{text}'") from e
    if len(values) != 4:
        raise ConfigError(f"--at expects four values x,y,z,t, got {len(values)}")
    return tuple(values[:3]), values[3]


def field_table(config: ExperimentConfig, position: Sequence[float], t: float) -> pd.DataFrame:
    """Direct Jefimenko terms at one point, plus the far-field series outside the unit sphere."""
    source = combined_source(config.mode_weights)
    point = EvalPoint(tuple(position), t)
    sample = causal_fields_direct(source, point, config.c, config.theta_nodes)
    rows = [{'term': name, 'x': v[0], 'y': v[1], 'z': v[2]} for name, v in sample.as_dict().items()]
    if point.r > 1.0:
        e2, e3, b2 = far_field_fields(source, point, t, config.c, config.theta_nodes)
        for name, v in (('E2_series', e2), ('E3_series', e3), ('B2_series', b2)):
            rows.append({'term': name, 'x': v[0], 'y': v[1], 'z': v[2]})
    return pd.DataFrame(rows, columns=['term', 'x', 'y', 'z'])


def cmd_verify(args, config: ExperimentConfig) -> int:
    report = run_verify(args.suite, config)
    _emit(frame_output(report.to_frame(), config.output_format, config), args.out)
    passed = sum(check.passed for check in report.checks)
    logger.info(f"\n=== VERIFY {args.suite.upper()} ===")
    logger.info(f"Checks passed: {passed}/{len(report.checks)}")
    return 0 if report.passed else 1


def cmd_sweep(args, config: ExperimentConfig) -> int:
    result = run_sweep(config)
    text = sweep_to_json(result) if config.output_format == 'json' else sweep_to_csv(result)
    _emit(text, args.out)
    if args.db:
        persist_sweep(result, args.db)
    return 0


def cmd_fields(args, config: ExperimentConfig) -> int:
    position, t = parse_point(args.at)
    _emit(frame_output(field_table(config, position, t), config.output_format, config), args.out)
    return 0


def cmd_wallis(args, config: ExperimentConfig) -> int:
    frame = wallis_frame(args.max)
    _emit(frame_output(frame, config.output_format, config), args.out)
    logger.info(f"Largest closed-form/quadrature delta: {frame['delta'].max():.3e}")
    return 0


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from e


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=str, help='key = value configuration file')
    common.add_argument('--format', dest='output_format', choices=['csv', 'json'],
                        help='Output format (default: csv)')
    common.add_argument('--out', type=str, help='Output file (default: stdout)')
    common.add_argument('--c', type=float, help='Signal speed in rescaled units (default: 10)')
    common.add_argument('--m', type=int, help='Mode number (default: 2)')
    common.add_argument('--weights', type=_float_list, help='Combination weights a1,a2,a3,a4')
    common.add_argument('--radii', type=_float_list, help='Sphere radii r1,r2,...')
    common.add_argument('--mode', choices=['direct', 'far_field'], help='Power evaluation mode')
    common.add_argument('--wave-speed', dest='wave_speed', type=float,
                        help='Velocity rescaling of the source (default: 1)')

    parser = argparse.ArgumentParser(description='Radiation of charge waves on a ring')
    sub = parser.add_subparsers(dest='command', required=True)

    verify = sub.add_parser('verify', parents=[common], help='Run an invariant suite')
    verify.add_argument('suite', choices=list(SUITES) + ['all'])
    verify.set_defaults(handler=cmd_verify)

    sweep = sub.add_parser(
        'sweep', parents=[common], help='Cycle power over the configured radii',
        description='Cycle power over the configured radii, one CSV row per radius.',
        epilog="The last CSV row has radius 'fit': its period column holds the fitted decay "
               "exponent and its cycle_integral column the fitted amplitude.")
    sweep.add_argument('--db', type=str, help='Append results to this DuckDB file')
    sweep.set_defaults(handler=cmd_sweep)

    fields = sub.add_parser('fields', parents=[common], help='Fields at one point and time')
    fields.add_argument('--at', required=True, help='x,y,z,t')
    fields.set_defaults(handler=cmd_fields)

    wallis = sub.add_parser('wallis', parents=[common], help='Wallis integral table')
    wallis.add_argument('--max', type=int, default=12, help='Largest order (default: 12)')
    wallis.set_defaults(handler=cmd_wallis)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main function to run the experiments."""
    args = build_parser().parse_args(argv)
    overrides = {key: getattr(args, key) for key in
                 ('c', 'm', 'weights', 'radii', 'mode', 'wave_speed', 'output_format')}
    try:
        config = load_config(args.config, overrides)
        return args.handler(args, config)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return 2
    except InputDomainError as e:
        logger.error(f"Invalid input: {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
