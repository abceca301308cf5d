import logging
import sys
from argparse import ArgumentParser, Namespace, RawTextHelpFormatter
from typing import List, NoReturn, Optional

from torsionlab.conditions import CONDITIONS, PASS
from torsionlab.config import RunConfig, load_config, parse_conditions
from torsionlab.errors import ConfigError, TorsionLabError
from torsionlab.manifolds import CATALOG, DEFAULT_DIMENSIONS
from torsionlab.report import EXIT_CONFIG, EXIT_FAIL, EXIT_PASS, emit_report, run_suite

log = logging.getLogger(__name__)


class TorsionLabArgumentParser(ArgumentParser):
    """Exits with the configuration status on usage errors."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def verify(cmd_opts: Namespace) -> int:
    try:
        if cmd_opts.config:
            config = load_config(cmd_opts.config)
        elif cmd_opts.manifold:
            config = RunConfig(manifold=cmd_opts.manifold)
        else:
            raise ConfigError("either --manifold or --config is required")
        config = config.with_overrides(
            manifold=cmd_opts.manifold,
            n=cmd_opts.n,
            c=cmd_opts.c,
            f=cmd_opts.f,
            alpha=cmd_opts.alpha,
            samples=cmd_opts.samples,
            seed=cmd_opts.seed,
            pass_tol=cmd_opts.pass_tol,
            fail_tol=cmd_opts.fail_tol,
            conditions=parse_conditions(cmd_opts.conditions) if cmd_opts.conditions else None,
            report=cmd_opts.report,
            format=cmd_opts.format,
            workers=cmd_opts.workers,
        )
        report = run_suite(config)
    except ConfigError as e:
        log.error("Configuration error: %s", e)
        return EXIT_CONFIG
    except TorsionLabError as e:
        log.error("Run aborted: %s", e)
        return EXIT_FAIL

    text = emit_report(report, config.format, config.report)
    if config.report is None:
        sys.stdout.write(text)

    for c in report.conditions:
        if c.verdict != PASS:
            log.warning("%s on %s: %s (max %s)", c.name, report.manifold, c.verdict, c.max)
    return report.exit_code


def catalog(cmd_opts: Namespace) -> int:
    for name in sorted(CATALOG):
        entry = CATALOG[name]
        print(f"{name:<22} n={DEFAULT_DIMENSIONS[name]:<3} {entry.description}")
        print(f"{'':<22}       {entry.anchor}")
    return EXIT_PASS


def build_parser() -> ArgumentParser:
    cli = TorsionLabArgumentParser(prog="torsionlab")
    cli.add_argument("--debug", help="Run the command with debug output.", action="store_true")
    subparsers = cli.add_subparsers(help="[sub-command] help")

    verify_description = """
    Samples points of a manifold and evaluates the harmonicity, harmonic-map and minimality
    conditions of its U(n) or U(n)x1 structure, together with their reductions.

    Exit status: 0 all pass, 1 any failure or evaluation error, 2 inconclusive only,
    3 configuration error.
    """
    parser_verify = subparsers.add_parser(
        "verify", description=verify_description, formatter_class=RawTextHelpFormatter
    )
    parser_verify.add_argument(
        "--manifold", help="A catalog name or a path to a custom manifold file (.yml)"
    )
    parser_verify.add_argument("--config", help="Path to a run configuration file (.yml)")
    parser_verify.add_argument("--n", help="Dimension", type=int)
    parser_verify.add_argument("--c", help="Curvature parameter of the hyperbolic space", type=float)
    parser_verify.add_argument("--f", help="Conformal factor exponent, e.g. 'x1*x3'")
    parser_verify.add_argument("--alpha", help="Override alpha of a contact structure")
    parser_verify.add_argument("--samples", help="Number of sample points", type=int)
    parser_verify.add_argument("--seed", help="Sampling seed", type=int)
    parser_verify.add_argument(
        "--conditions", help=f"Comma separated subset of: {', '.join(sorted(CONDITIONS))}"
    )
    parser_verify.add_argument("--pass-tol", dest="pass_tol", type=float)
    parser_verify.add_argument("--fail-tol", dest="fail_tol", type=float)
    parser_verify.add_argument("--report", help="Output path (default: standard output)")
    parser_verify.add_argument("--format", choices=("json", "csv"))
    parser_verify.add_argument("--workers", help="Parallel evaluation threads", type=int)
    parser_verify.set_defaults(func=verify)

    parser_catalog = subparsers.add_parser("catalog", description="Lists the built-in manifolds.")
    parser_catalog.set_defaults(func=catalog)
    return cli


def run(argv: Optional[List[str]] = None) -> int:
    cli = build_parser()
    cmd_opts: Namespace = cli.parse_args(argv)

    if cmd_opts.debug:
        LOGLEVEL = logging.DEBUG
    else:
        LOGLEVEL = logging.WARNING

    logging.basicConfig(
        format="[%(asctime)s] [%(levelname)8s] %(message)s (%(filename)s:%(lineno)s)",
        level=LOGLEVEL,
    )

    if not hasattr(cmd_opts, "func"):
        cli.print_help()
        return EXIT_CONFIG

    return cmd_opts.func(cmd_opts)


def main() -> None:
    res: int = run()
    if res == EXIT_CONFIG:
        log.error("An error has occurred.")
    sys.exit(res)
