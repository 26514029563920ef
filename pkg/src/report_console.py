import logging
from typing import Dict, List

from colorama import init, Fore, Style

init(autoreset=True)
logger = logging.getLogger(__name__)


def _verdict(passed: bool) -> str:
    return f"{Fore.GREEN}PASS{Style.RESET_ALL}" if passed else f"{Fore.RED}FAIL{Style.RESET_ALL}"


def _label(text: str) -> str:
    return f"{Fore.YELLOW}{text}{Style.RESET_ALL}"


def format_coreset_summary(report: Dict) -> str:
    message = f"{Fore.CYAN}CORESET BUILT{Style.RESET_ALL}\n"
    message += f"{_label('Input')}: {report['n']} points, d={report['d']}\n"
    message += f"{_label('Params')}: k={report['k']}, z={report['z']}, eps={report['eps']}\n"
    message += f"Groups: {report['num_groups']}, Γ_G={report['gamma_nominal']}"
    if report.get('capped_groups'):
        message += f" ({len(report['capped_groups'])} capped)"
    message += f"\nSize: {report['coreset_size']} ({report['presize']} before merging)\n"
    message += f"Total weight: {report['total_weight']:,.2f}"
    if report.get('evaluation'):
        evaluation = report['evaluation']
        message += f"\nMax rel error: {evaluation['max_rel_error']:.4g} {_verdict(evaluation['passed'])}"
        message += f"\nSuccess rate: {report['success_rate']:.2f} over {report['repetitions']} repetitions"
    return message


def format_distortion_summary(report: Dict) -> str:
    message = f"{Fore.CYAN}DISTORTION{Style.RESET_ALL} {_verdict(report['passed'])}\n"
    message += f"{_label('Max rel error')}: {report['max_rel_error']:.4g} (eps={report['eps']})\n"
    message += f"Center sets: {report['num_center_sets']}"
    for name, stats in report.get('families', {}).items():
        message += f"\n  {name}: {stats['count']} sets, max {stats['max_rel_error']:.4g}, " \
                   f"mean {stats['mean_rel_error']:.4g}"
    return message


def format_claims_summary(report: Dict) -> str:
    message = f"{Fore.CYAN}LOWER-BOUND CLAIMS{Style.RESET_ALL} {_verdict(not report['violations'])}\n"
    message += f"{_label('Copy')}: {report['target_copy']}, t={report['t']:.6g}\n"
    message += f"Points checked: {report['checked_points']} ({report['covered_points']} covered)\n"
    message += f"Gap 0.4t: {report['gap']:.6g}"
    for violation in report['violations'][:5]:
        message += f"\n  {Fore.RED}{violation}{Style.RESET_ALL}"
    return message


def format_embedding_summary(report: Dict) -> str:
    ok = report['certificate_failures'] == 0
    message = f"{Fore.CYAN}TERMINAL EMBEDDING{Style.RESET_ALL} {_verdict(ok)}\n"
    message += f"{_label('Anchors')}: {report['num_anchors']}, queries: {report['num_queries']}\n"
    message += f"Max additive error: {report['max_additive_error']:.4g}"
    if report.get('additive_bound') is not None:
        message += f" (bound {report['additive_bound']:.4g}, {report['fraction_within_bound']:.0%} within)"
    message += f"\nMax multiplicative error: {report['max_multiplicative_error']:.4g}"
    return message


def format_sweep_summary(rows: List[Dict]) -> str:
    failed = [row for row in rows if row.get('error')]
    message = f"{Fore.CYAN}SWEEP{Style.RESET_ALL} {_verdict(not failed)}\n"
    message += f"{_label('Cells')}: {len(rows)}, errors: {len(failed)}"
    for row in failed[:5]:
        message += f"\n  {Fore.RED}k={row['k']} eps={row['eps']} seed={row['seed']}: {row['error']}{Style.RESET_ALL}"
    return message


def print_summary(message: str, passed: bool = True):
    separator = "=" * 50
    color = Fore.GREEN if passed else Fore.RED
    print(f"\n{color}{separator}{Style.RESET_ALL}")
    print(message)
    print(f"{color}{separator}{Style.RESET_ALL}\n")
