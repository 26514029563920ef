import json

import numpy as np
import pytest

from kzcoreset import main
from src.geometry import WeightedPointSet
from src.pointset_io import parse_pointset, read_json, write_pointset


@pytest.fixture
def input_file(tmp_path, mixture):
    path = tmp_path / 'points.txt'
    write_pointset(path, mixture)
    return path


def run_coreset(input_file, tmp_path, *extra):
    out, report = tmp_path / 'coreset.txt', tmp_path / 'coreset.json'
    code = main(['coreset', '--input', str(input_file), '--k', '4', '--eps', '0.3',
                 '--out', str(out), '--report', str(report), '--quiet', *extra])
    return code, out, report


def test_coreset_command(input_file, tmp_path, mixture):
    code, out, report = run_coreset(input_file, tmp_path, '--dump-groups', str(tmp_path / 'groups.json'))
    assert code == 0
    coreset = parse_pointset(out)
    data = read_json(report)
    assert data['coreset_size'] == coreset.n
    assert data['presize'] >= coreset.n
    assert data['n'] == mixture.n
    assert data['total_weight'] == pytest.approx(coreset.total_weight)
    assert data['provenance'][0] == 'astar:0'
    assert data['runtime_ms'] is not None
    assert 'groups' in read_json(tmp_path / 'groups.json')


def test_reproducible_runs_are_byte_identical(input_file, tmp_path):
    code, out, report = run_coreset(input_file, tmp_path, '--reproducible', '--seed', '3')
    assert code == 0
    first_points, first_report = out.read_bytes(), report.read_bytes()
    assert read_json(report)['runtime_ms'] is None

    run_coreset(input_file, tmp_path, '--reproducible', '--seed', '3')
    assert out.read_bytes() == first_points
    assert report.read_bytes() == first_report

    # thread count shows up in the echoed config, not in the coreset
    run_coreset(input_file, tmp_path, '--reproducible', '--seed', '3', '--threads', '4')
    assert out.read_bytes() == first_points


def test_repetitions_are_ranked(input_file, tmp_path):
    code, _, report = run_coreset(input_file, tmp_path, '--repetitions', '3', '--families', 'random:5')
    assert code == 0
    data = read_json(report)
    assert len(data['attempts']) == 3
    assert data['evaluation']['max_rel_error'] == min(a['max_rel_error'] for a in data['attempts'])


def test_evaluate_command(input_file, tmp_path):
    _, out, _ = run_coreset(input_file, tmp_path)
    report = tmp_path / 'eval.json'
    code = main(['evaluate', '--input', str(input_file), '--coreset', str(out), '--k', '4',
                 '--eps', '0.3', '--families', 'random:10,perturbed:4', '--report', str(report),
                 '--quiet'])
    assert code == 0
    data = read_json(report)
    assert data['num_center_sets'] == 14
    assert set(data['families']) == {'random', 'perturbed'}


def test_lower_bound_round_trip(tmp_path):
    points, meta = tmp_path / 'lb.txt', tmp_path / 'lb.json'
    assert main(['gen-lb', '--k', '16', '--out', str(points), '--meta', str(meta), '--quiet']) == 0
    assert parse_pointset(points).n == 16

    support = tmp_path / 'support.txt'
    support.write_text('0 2 4 6 8 10 12 14\n')
    report = tmp_path / 'verify.json'
    code = main(['verify-lb', '--meta', str(meta), '--coreset-support', str(support),
                 '--report', str(report), '--quiet'])
    assert code == 0
    data = read_json(report)
    assert data['ok'] is True
    assert data['claims']['checked_points'] == 16
    assert data['weight_probe']['copy_size'] == 16


def test_tampered_meta_fails_verification(tmp_path):
    points, meta = tmp_path / 'lb.txt', tmp_path / 'lb.json'
    main(['gen-lb', '--k', '16', '--out', str(points), '--meta', str(meta), '--quiet'])
    data = json.loads(meta.read_text())
    data['t'] = 3.0
    meta.write_text(json.dumps(data))
    code = main(['verify-lb', '--meta', str(meta), '--report', str(tmp_path / 'v.json'), '--quiet'])
    assert code == 1
    assert read_json(tmp_path / 'v.json')['claims']['violations']


def test_embed_command(tmp_path):
    rng = np.random.default_rng(0)
    anchors, queries = tmp_path / 'anchors.txt', tmp_path / 'queries.txt'
    write_pointset(anchors, WeightedPointSet.unweighted(rng.normal(size=(10, 8))))
    write_pointset(queries, WeightedPointSet.unweighted(rng.normal(size=(3, 8))))
    report = tmp_path / 'embed.json'
    code = main(['embed', '--input', str(anchors), '--alpha', '0.5', '--queries', str(queries),
                 '--report', str(report), '--quiet'])
    assert code == 0
    data = read_json(report)
    assert data['result']['num_queries'] == 3
    assert data['result']['num_anchors'] == 11


def test_sweep_command(tmp_path):
    config = tmp_path / 'sweep.json'
    config.write_text(json.dumps({
        'dataset': {'generator': 'uniform-cube', 'params': {'n': 200, 'd': 2}},
        'k_grid': [2], 'eps_grid': [0.3], 'gamma_const_grid': [0.05], 'seed_grid': [0, 1],
        'families': 'random:3',
    }))
    out = tmp_path / 'sweep.csv'
    assert main(['sweep', '--config', str(config), '--out', str(out), '--quiet']) == 0
    assert len(out.read_text().splitlines()) == 3


@pytest.mark.parametrize('contents', [None, '2 2\n0 0\n'])
def test_bad_input_exits_with_two(tmp_path, contents):
    path = tmp_path / 'missing.txt'
    if contents is not None:
        path.write_text(contents)
    code = main(['coreset', '--input', str(path), '--k', '2', '--eps', '0.3',
                 '--out', str(tmp_path / 'o.txt'), '--report', str(tmp_path / 'r.json'), '--quiet'])
    assert code == 2


@pytest.mark.parametrize('extra', [['--repetitions', '0'], ['--repetitions', '-2'], ['--seed', '-1']])
def test_bad_arguments_exit_with_two(input_file, tmp_path, extra):
    code, out, _ = run_coreset(input_file, tmp_path, *extra)
    assert code == 2
    assert not out.exists()


def test_out_of_range_support_exits_with_two(tmp_path):
    points, meta = tmp_path / 'lb.txt', tmp_path / 'lb.json'
    assert main(['gen-lb', '--k', '16', '--out', str(points), '--meta', str(meta), '--quiet']) == 0
    support = tmp_path / 'support.txt'
    support.write_text('0 1 9999\n')
    code = main(['verify-lb', '--meta', str(meta), '--coreset-support', str(support),
                 '--report', str(tmp_path / 'v.json'), '--quiet'])
    assert code == 2


def test_exhaustive_guard_exits_with_two(tmp_path):
    path = tmp_path / 'line.txt'
    write_pointset(path, WeightedPointSet.unweighted(np.arange(40, dtype=float).reshape(-1, 1)))
    code = main(['evaluate', '--input', str(path), '--coreset', str(path), '--k', '20', '--eps', '0.3',
                 '--exhaustive', '--report', str(tmp_path / 'r.json'), '--quiet'])
    assert code == 2


def test_missing_required_argument():
    with pytest.raises(SystemExit) as exc:
        main(['coreset', '--k', '2'])
    assert exc.value.code == 2
