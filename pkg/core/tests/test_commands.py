import pytest
from django.core.management import call_command
from django.core.management.base import CommandError

from core.management.commands.outage import Command as OutageCommand
from core.management.commands.throughput import Command as ThroughputCommand
from core.schemas.data_models import ChannelSpec, HarqScheme
from core.services.harq_core import throughput
from core.services.outage import estimate_outages
from core.services.reports import COLUMNS, parse_snr_axis


def test_snr_axis_forms():
    assert parse_snr_axis('10') == (10.0,)
    assert parse_snr_axis('0,5,12') == (0.0, 5.0, 12.0)
    assert len(parse_snr_axis('0:20:1')) == 21
    assert parse_snr_axis('0:20:0.5')[-1] == 20.0
    with pytest.raises(ValueError):
        parse_snr_axis('0:20:0')


def test_outage_rows_per_round(run_command, parse_csv):
    comments, header, rows = parse_csv(
        run_command('outage', '--snr-db', '10', '--k', '600', '--lengths', '300,300')
    )
    assert tuple(header) == COLUMNS['outage']
    assert [row[1] for row in rows] == ['1', '2']
    assert comments[0] == '# harqfbl outage'
    assert '# method=oracle' in comments
    for row in rows:
        record = dict(zip(header, row))
        assert float(record['v_m']) <= float(record['omega_oracle']) <= float(record['u_m'])


def test_outage_sweep_has_one_row_per_snr(run_command, parse_csv):
    _, _, rows = parse_csv(run_command('outage', '--snr-db', '0:20:1', '--k', '600', '--lengths', '600'))
    assert len(rows) == 21
    assert rows[0][0] == '0' and rows[-1][0] == '20'


def test_throughput_row_matches_the_service(run_command, parse_csv):
    _, header, rows = parse_csv(
        run_command('throughput', '--snr-db', '10', '--k', '600', '--lengths', '300,300', '--df', '0')
    )
    assert tuple(header) == COLUMNS['throughput']
    record = dict(zip(header, rows[0]))
    scheme = HarqScheme(nats=600.0, lengths=(300, 300))
    spec = ChannelSpec.from_db(10.0)
    expected = throughput(scheme, estimate_outages(scheme, spec)).eta
    assert float(record['eta']) == pytest.approx(expected, rel=1e-11)
    assert record['lengths'] == '300;300'


def test_openloop_with_given_length(run_command, parse_csv):
    _, header, rows = parse_csv(run_command('openloop', '--snr-db', '10', '--k', '600', '--lengths', '600'))
    record = dict(zip(header, rows[0]))
    assert record['length'] == '600'
    assert float(record['eta']) == pytest.approx(600 * (1 - float(record['omega'])) / 600, rel=1e-10)


def test_config_file_is_overridden_by_flags(tmp_path, run_command, parse_csv):
    config = tmp_path / 'run.conf'
    config.write_text('snr_db=10\nk=600\nlengths=600\nmethod=linearized\n')
    comments, _, rows = parse_csv(run_command('throughput', '--config', str(config), '--snr-db', '12'))
    assert rows[0][0] == '12'
    assert rows[0][5] == 'linearized'
    assert '# snr_db=12' in comments


def test_usage_errors_exit_with_one(tmp_path):
    with pytest.raises(CommandError) as excinfo:
        call_command('outage', '--snr-db', '10', '--lengths', '300,300')
    assert excinfo.value.returncode == 1

    with pytest.raises(CommandError) as excinfo:
        call_command('throughput', '--snr-db', '10', '--k', '600', '--lengths', '50,550')
    assert excinfo.value.returncode == 1

    config = tmp_path / 'bad.conf'
    config.write_text('colour=blue\n')
    with pytest.raises(CommandError) as excinfo:
        call_command('outage', '--config', str(config))
    assert excinfo.value.returncode == 1


def test_bad_flags_exit_with_one_from_the_command_line():
    with pytest.raises(SystemExit) as excinfo:
        OutageCommand().run_from_argv(['manage.py', 'outage', '--no-such-flag'])
    assert excinfo.value.code == 1


def test_numerical_failure_exits_with_two_and_names_the_point():
    args = ['--snr-db=-20', '--k', '600', '--lengths', '300,300', '--method', 'high_snr']
    with pytest.raises(CommandError) as excinfo:
        call_command('throughput', *args)
    assert excinfo.value.returncode == 2
    assert 'snr_db=-20' in str(excinfo.value)

    with pytest.raises(SystemExit) as exited:
        ThroughputCommand().run_from_argv(['manage.py', 'throughput'] + args)
    assert exited.value.code == 2


def test_simulation_csv_does_not_depend_on_workers(run_command):
    args = ['--snr-db', '10', '--k', '600', '--lengths', '300,300', '--packets', '150000', '--seed', '7']
    single = run_command('simulate', *args, '--workers', '1')
    assert run_command('simulate', *args, '--workers', '4') == single
    assert run_command('simulate', *args, '--workers', '8') == single
    assert run_command('simulate', *args, '--workers', '1') == single


def test_delay_threshold_rows(run_command, parse_csv):
    _, header, rows = parse_csv(run_command('delay-threshold', '--snr-db', '10', '-M', '2'))
    assert tuple(header) == COLUMNS['delay_threshold']
    assert [row[1] for row in rows] == ['300', '600']
    for row in rows:
        record = dict(zip(header, row))
        assert float(record['r_lower']) <= float(record['r']) + 1e-8
        assert float(record['r']) <= float(record['r_upper']) + 1e-8


def test_panel_mode_writes_csv_and_plot_script(tmp_path, parse_csv):
    out = tmp_path / 'fig1c.csv'
    call_command('optimize', '--mode', 'fig1c', '--snr-db', '10', '-M', '2', '--out', str(out))
    _, header, rows = parse_csv(out.read_text())
    assert tuple(header) == COLUMNS['fig1c']
    assert len(rows) == 2

    script = (tmp_path / 'fig1c.gp').read_text()
    assert "'fig1c.csv'" in script
    r_column = COLUMNS['fig1c'].index('r') + 1
    assert f'${r_column}' in script
    assert 'K=300' in script and 'K=600' in script


def test_optimize_rejects_explicit_lengths():
    with pytest.raises(CommandError) as excinfo:
        call_command('optimize', '--snr-db', '10', '--lengths', '300,300')
    assert excinfo.value.returncode == 1
