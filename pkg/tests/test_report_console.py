from src.report_console import (
    format_claims_summary,
    format_distortion_summary,
    format_sweep_summary,
    print_summary,
)


def test_distortion_summary_lists_families():
    text = format_distortion_summary({
        'passed': False, 'max_rel_error': 0.42, 'eps': 0.3, 'num_center_sets': 3,
        'families': {'random': {'count': 3, 'max_rel_error': 0.42, 'mean_rel_error': 0.1}},
    })
    assert 'FAIL' in text
    assert 'random: 3 sets' in text


def test_claims_summary_shows_first_violations():
    text = format_claims_summary({
        'target_copy': 0, 't': 2.0, 'checked_points': 16, 'covered_points': 8, 'gap': 0.8,
        'violations': [f"point {i}: off" for i in range(8)],
    })
    assert 'point 4: off' in text
    assert 'point 5: off' not in text


def test_sweep_summary_counts_errors():
    rows = [{'k': 2, 'eps': 0.3, 'seed': 0, 'error': ''},
            {'k': 9, 'eps': 0.3, 'seed': 1, 'error': 'InvalidParameterError: too few points'}]
    text = format_sweep_summary(rows)
    assert 'errors: 1' in text
    assert 'k=9' in text


def test_print_summary_frames_message(capsys):
    print_summary('all good')
    out = capsys.readouterr().out
    assert 'all good' in out
    assert out.count('=' * 50) == 2
