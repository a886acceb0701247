#!/usr/bin/env python3
"""
Benchmark command line: bench <experiment> [options]

Exit status is 0 on success, 1 on usage or configuration errors and 2
when fused and unfused outputs differ.
"""

import csv
import dataclasses
import inspect
import io
import logging
import sys
from typing import List, Optional, Sequence

import click
from dotenv import find_dotenv, load_dotenv

from fusedkernel.bench.experiments import EXPERIMENTS, BenchSettings, report_memory
from fusedkernel.bench.stats import MIN_REPEATS, BenchRecord
from fusedkernel.config.execution_config import ExecConfig
from fusedkernel.config.logging_config import configure_logging
from fusedkernel.dpp.coarsening import ALLOWED_BLOCKS, CoarseningPlan
from fusedkernel.errors import EqualityGateError, FusedKernelError
from fusedkernel.tensor.scalar_kind import ScalarKind

logger = logging.getLogger(__name__)

CSV_HEADER = ['experiment', 'param', 'fused_ns', 'unfused_ns', 'speedup', 'rsd_pct']
MEMORY_HEADER = ['experiment', 'param', 'bytes']


class BenchCommand(click.Command):
    """click command whose failures map onto the bench exit codes"""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            result = super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        except click.ClickException as e:
            e.show()
            code = 1
        except EqualityGateError as e:
            logger.error(f"Equality gate failed: {e}")
            click.echo(f"Error: {e}", err=True)
            code = 2
        except (FusedKernelError, ValueError) as e:
            logger.error(f"Benchmark failed: {e}")
            click.echo(f"Error: {e}", err=True)
            code = 1
        else:
            code = result if isinstance(result, int) else 0
        if standalone_mode:
            sys.exit(code)
        return code


def parse_sweep(experiment: str, raw: str) -> List:
    """Comma separated ints, or input->output kind pairs for datatype"""
    values = []
    for item in (part.strip() for part in raw.split(',')):
        if not item:
            continue
        try:
            if experiment == 'datatype':
                source, target = item.split('->')
                values.append((ScalarKind[source.strip().upper()], ScalarKind[target.strip().upper()]))
            else:
                values.append(int(item))
        except (KeyError, ValueError):
            raise click.BadParameter(f"cannot parse sweep value {item!r}", param_hint='--sweep')
    if not values:
        raise click.BadParameter("sweep is empty", param_hint='--sweep')
    return values


def parse_dims(raw: str):
    try:
        width, height = (int(part) for part in raw.lower().split('x'))
    except ValueError:
        raise click.BadParameter(f"expected WIDTHxHEIGHT, got {raw!r}", param_hint='--dims')
    if width < 1 or height < 1:
        raise click.BadParameter(f"dimensions must be positive, got {raw!r}", param_hint='--dims')
    return width, height


def build_config(threads: Optional[int], coarsen: Optional[int], chunk_rows: Optional[int]) -> ExecConfig:
    """Environment configuration with command-line overrides"""
    config = ExecConfig.from_env()
    changes = {}
    if threads is not None:
        changes['workers'] = threads
    if coarsen is not None:
        changes['coarsening'] = CoarseningPlan(coarsen, config.coarsening.tail_policy)
    if chunk_rows is not None:
        changes['chunk_rows'] = chunk_rows
    return dataclasses.replace(config, **changes)


def metadata_lines(experiment: str, settings: BenchSettings) -> List[str]:
    metadata = {'experiment': experiment, **settings.config.describe(),
                'repeats': settings.repeats, 'warmup': settings.warmup, 'seed': settings.seed}
    return [f"# {key}={value}" for key, value in metadata.items()]


def write_table(lines: Sequence[str], header: Sequence[str], rows: Sequence[Sequence],
                stream) -> None:
    for line in lines:
        stream.write(line + '\n')
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(header)
    writer.writerows(rows)


@click.command(cls=BenchCommand)
@click.argument('experiment', type=click.Choice([*EXPERIMENTS, 'memory']))
@click.option('--repeats', type=click.IntRange(min=MIN_REPEATS), default=30, show_default=True,
              help='Timed repetitions per strategy')
@click.option('--warmup', type=click.IntRange(min=0), default=2, show_default=True,
              help='Untimed repetitions before timing')
@click.option('--threads', type=click.IntRange(min=0), default=None,
              help='Worker threads (0 = all cores; default from FK_WORKERS)')
@click.option('--coarsen', type=click.Choice([str(block) for block in ALLOWED_BLOCKS]), default=None,
              help='Thread coarsening block')
@click.option('--chunk-rows', type=click.IntRange(min=1), default=None, help='Rows per scheduled task')
@click.option('--csv', 'csv_path', type=click.Path(dir_okay=False, writable=True), default=None,
              help='Write results to this file instead of stdout')
@click.option('--seed', type=int, default=0, show_default=True, help='Random input seed')
@click.option('--sweep', default=None, help='Comma separated swept values, e.g. 2,102,202 or u8->f32')
@click.option('--dims', default=None, help='Matrix size WIDTHxHEIGHT for experiments that take one')
@click.option('--log-level', default=None, help='Logging level (default FK_LOG_LEVEL or INFO)')
def bench(experiment, repeats, warmup, threads, coarsen, chunk_rows, csv_path, seed, sweep, dims,
          log_level):
    """Compare fused and unfused execution for EXPERIMENT and emit CSV."""
    load_dotenv(find_dotenv(usecwd=True))
    configure_logging(log_level)

    config = build_config(threads, int(coarsen) if coarsen else None, chunk_rows)
    settings = BenchSettings(repeats=repeats, warmup=warmup, seed=seed, config=config)
    lines = metadata_lines(experiment, settings)
    logger.info(f"Running bench {experiment} with {config.describe()}")

    if experiment == 'memory':
        header = MEMORY_HEADER
        rows = [['memory', name, nbytes] for name, nbytes in report_memory().items()]
    else:
        runner = EXPERIMENTS[experiment]
        kwargs = {}
        if sweep is not None:
            kwargs['sweep'] = parse_sweep(experiment, sweep)
        if dims is not None:
            if 'dims' not in inspect.signature(runner).parameters:
                raise click.UsageError(f"{experiment} does not take --dims")
            kwargs['dims'] = parse_dims(dims)
        records: List[BenchRecord] = runner(settings, **kwargs)
        header = CSV_HEADER
        rows = [record.as_row() for record in records]

    if csv_path:
        with open(csv_path, 'w', newline='') as stream:
            write_table(lines, header, rows, stream)
        logger.info(f"Wrote {len(rows)} rows to {csv_path}")
    else:
        buffer = io.StringIO()
        write_table(lines, header, rows, buffer)
        click.echo(buffer.getvalue(), nl=False)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    return bench.main(args=argv, prog_name='bench', standalone_mode=False)


if __name__ == "__main__":
    sys.exit(main())
