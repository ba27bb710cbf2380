"""
Main Entry Point for the EGM Field Simulator
Subcommands: simulate, identities, cauchy-check, lorentz-check

Exit codes: 0 success, 1 validation error, 2 runtime failure or failed check
"""
import sys
import argparse
from typing import List, Optional

from config import Config
from errors import ScenarioError, SimulationError
from identities import check_identities
from scenario import load_scenario
from simulator import cauchy_check, lorentz_check, run_scenario
from utils.logger import logger

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FAILURE = 2


def _load(args):
    scenario = load_scenario(args.config)
    if args.order is not None:
        scenario = scenario.model_copy(update={'order': args.order})
    return scenario


def cmd_simulate(args) -> int:
    scenario = _load(args)
    if scenario.kind not in ('free', 'interact', 'background'):
        raise ScenarioError('kind', f"simulate runs free, interact or background scenarios, got {scenario.kind}")
    run_scenario(scenario, args.out, args.dump_every, args.log_every)
    return EXIT_OK


def cmd_cauchy_check(args) -> int:
    result = cauchy_check(_load(args), args.out)
    return EXIT_OK if result.passed else EXIT_FAILURE


def cmd_lorentz_check(args) -> int:
    scenario = _load(args)
    if scenario.boost is None:
        raise ScenarioError('boost', "lorentz-check needs a boost")
    result = lorentz_check(scenario, args.out)
    return EXIT_OK if result.passed else EXIT_FAILURE


def cmd_identities(args) -> int:
    if args.count < 1:
        raise ScenarioError('count', f"must be >= 1, got {args.count}")
    report = check_identities(args.seed, args.count)
    logger.info("=" * 60)
    logger.info(f"Identity battery: seed {report.seed}, {report.count} samples")
    for line in report.lines():
        logger.info(line)
    if report.passed:
        logger.info("✅ All identities pass")
        return EXIT_OK
    logger.error(f"❌ Failing identities: {', '.join(report.failures)}")
    return EXIT_FAILURE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Biquaternion electro-gravimagnetic field simulator')
    sub = parser.add_subparsers(dest='command', required=True)

    def scenario_command(name: str, help_text: str, handler):
        p = sub.add_parser(name, help=help_text)
        p.add_argument('config', help='YAML scenario file')
        p.add_argument('--out', default=None, help='Output directory (overrides outputs.dir)')
        p.add_argument('--order', type=int, choices=(2, 4), default=None, help='Stencil order')
        p.set_defaults(handler=handler)
        return p

    simulate = scenario_command('simulate', 'Run a free, interact or background scenario', cmd_simulate)
    simulate.add_argument('--dump-every', type=int, default=None, help='Write BQF1 dumps every K steps')
    simulate.add_argument('--log-every', type=int, default=Config.LOG_EVERY,
                          help='Log one diagnostics line every K steps')
    scenario_command('cauchy-check', 'Kirchhoff solver against the stepper', cmd_cauchy_check)
    scenario_command('lorentz-check', 'Lorentz identities and covariance for the scenario boost',
                     cmd_lorentz_check)

    identities = sub.add_parser('identities', help='Randomized algebra and Lorentz identity battery')
    identities.add_argument('--seed', type=int, default=1)
    identities.add_argument('--count', type=int, default=1000)
    identities.set_defaults(handler=cmd_identities)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point with CLI argument parsing"""
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ValueError as e:
        # ScenarioError, grid and stack validation
        logger.error(f"Invalid input: {e}")
        return EXIT_INVALID
    except SimulationError as e:
        logger.error(f"🚨 Run aborted: {e}")
        return EXIT_FAILURE
    except KeyboardInterrupt:
        logger.info("\nStopped by user")
        return EXIT_FAILURE
    except Exception as e:
        logger.error(f"Fatal error: {e}", exc_info=True)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
