import pytest

from database import DatabaseManager


@pytest.fixture
def manager(tmp_path):
    return DatabaseManager(str(tmp_path / 'runs.db'))


def test_record_and_get(manager):
    run = manager.record_run('minnorm', 'oslocal.minnorm/v1', 7, {'n': 3, 'space': 'row'}, '{"x": 1}', 0)
    stored = manager.get_run(run.id)
    assert stored.command == 'minnorm'
    assert stored.seed == 7
    assert stored.config == {'n': 3, 'space': 'row'}
    assert stored.payload_json == '{"x": 1}'
    assert stored.created_at is not None


def test_missing_run(manager):
    assert manager.get_run(12345) is None


def test_list_runs_newest_first(manager):
    for command in ('minnorm', 'pi2oh', 'minnorm'):
        manager.record_run(command, f'oslocal.{command}/v1', 0, {}, '{}', 0)
    runs = manager.list_runs()
    assert [r.id for r in runs] == sorted((r.id for r in runs), reverse=True)
    assert len(manager.list_runs(command='minnorm')) == 2
    assert len(manager.list_runs(limit=1)) == 1
