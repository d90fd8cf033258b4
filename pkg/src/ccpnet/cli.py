"""
ccpnet CLI - Run the demonstration, Bell analysis, geometry queries and certificate checks.

Exit codes: 0 success, 2 negative scientific result (invalid certificate,
infeasible value, no correlation, ...), 1 software or input failure,
130 interrupted.
"""

import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Sequence, Tuple

import click
from rich.console import Console
from rich.logging import RichHandler

from . import __version__
from .bell import bell_survey, bell_verdict
from .commoncause import correlation, verify_common_cause
from .config_manager import CcpnetConfig, ToleranceConfig, get_config
from .errors import CcpnetError, ConfigError, SchemaError
from .exporters import get_exporter
from .localnet import LatticeNet, base_of, default_demo_regions, default_demo_state, wccp_demo
from .minkowski import (
    DoubleCone,
    Region,
    SamplingBox,
    cpast,
    is_empty_analytic,
    is_empty_sampled,
    principle_strength,
    spacelike_separated,
    spast,
    wpast,
)
from .outcome_gate import Outcome, OutcomeGate
from .qprob import TensorSpace
from .serialization import (
    as_int_list,
    as_number,
    check_fields,
    decode_projection,
    decode_region,
    decode_state,
    encode_bell_verdict,
    encode_certificate,
    encode_demo_report,
    encode_geometry_verdict,
    encode_region,
    encode_survey,
    load_json,
    require_object,
)

logger = logging.getLogger(__name__)

COMMANDS: Tuple[str, ...] = ("demo-wccp", "bell", "survey", "geometry", "verify-cc")
GEOMETRY_QUERIES: Tuple[str, ...] = ("spast", "cpast", "wpast", "separated", "strength")

# Half-width of the default sampling box for regions other than double cones
_DEFAULT_BOX_HALF_WIDTH = 10.0


@dataclass(frozen=True)
class RunConfig:
    """One CLI invocation, independent of click."""

    command: str
    input_path: Optional[Path] = None
    seed: Optional[int] = None
    tolerance_overrides: Dict[str, float] = field(default_factory=dict)
    samples: Optional[int] = None
    output: Optional[Path] = None
    format: str = "json"
    options: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"Unknown command '{self.command}'. Choose from: {', '.join(COMMANDS)}")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"Unknown output format '{self.format}'")
        if self.samples is not None and self.samples < 1:
            raise ConfigError(f"--samples must be positive, got {self.samples}")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "RunConfig":
        """
        Build a RunConfig from a plain mapping.

        Raises:
            ConfigError: On unknown fields or a missing command
        """
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"Unknown run configuration fields: {', '.join(unknown)}")
        if "command" not in data:
            raise ConfigError("Run configuration needs a 'command'")
        values = dict(data)
        for key in ("input_path", "output"):
            if values.get(key) is not None:
                values[key] = Path(values[key])
        return cls(**values)


def parse_tolerance_overrides(items: Sequence[str]) -> Dict[str, float]:
    """Parse repeated ``NAME=VALUE`` options."""
    overrides: Dict[str, float] = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise ConfigError(f"Tolerance override '{item}' is not NAME=VALUE")
        try:
            overrides[name.strip()] = float(value)
        except ValueError:
            raise ConfigError(f"Tolerance override '{item}' has a non-numeric value")
    return overrides


# Command handlers: (config, settings, tolerances, seed) -> (result data, outcome)

Handler = Callable[[RunConfig, CcpnetConfig, ToleranceConfig, int], Tuple[Dict[str, Any], Outcome]]


def _read_input(config: RunConfig, required: Sequence[str], optional: Sequence[str] = ()) -> Mapping[str, Any]:
    if config.input_path is None:
        raise SchemaError(f"Command '{config.command}' needs an input JSON file")
    payload = require_object(load_json(config.input_path), "$")
    check_fields(payload, required, optional, "$")
    return payload


def _run_demo(config: RunConfig, settings: CcpnetConfig, tol: ToleranceConfig,
              seed: int) -> Tuple[Dict[str, Any], Outcome]:
    opts = config.options
    net = LatticeNet(int(opts.get("sites") or settings.demo_sites))
    v1, v2 = default_demo_regions(net)
    site_1, site_2 = min(base_of(net, v1, tol)), min(base_of(net, v2, tol))
    phi = default_demo_state(net, site_1, site_2, opts.get("weight"), opts.get("rest_bias"))
    report = wccp_demo(net, v1, v2, phi, replace(settings.search, seed=seed),
                       samples=config.samples, seed=seed, tol=tol)
    outcome = Outcome(
        command="demo wccp",
        valid=report.valid,
        summary={
            "Cause algebra": report.algebra,
            "Rank of C": report.certificate.C.rank,
            "base(W)": list(report.bases["W"]),
            "Failed critical checks": [c.check_name for c in report.critical_failures] or "none",
        },
    )
    return encode_demo_report(report), outcome


def _run_bell(config: RunConfig, settings: CcpnetConfig, tol: ToleranceConfig,
              seed: int) -> Tuple[Dict[str, Any], Outcome]:
    payload = _read_input(config, ("state", "sites_1", "sites_2"))
    phi = decode_state(payload["state"], "$.state", tol)
    sites_1 = as_int_list(payload["sites_1"], "$.sites_1")
    sites_2 = as_int_list(payload["sites_2"], "$.sites_2")
    verdict = bell_verdict(phi, sites_1, sites_2, replace(settings.search, seed=seed), seed, tol)
    if verdict.converged_starts == 0:
        logger.warning("No seesaw start converged; reporting the best value found")
    data = encode_bell_verdict(verdict, space=phi.space)
    data.update({"sites_1": sites_1, "sites_2": sites_2, "seed": seed})
    outcome = Outcome(
        command="bell",
        summary={"Bell value": f"{verdict.value:.12g}", "Correlated": verdict.correlated,
                 "Converged starts": f"{verdict.converged_starts}/{verdict.starts}"},
    )
    return data, outcome


def _run_survey(config: RunConfig, settings: CcpnetConfig, tol: ToleranceConfig,
                seed: int) -> Tuple[Dict[str, Any], Outcome]:
    opts = config.options
    n_samples = int(opts.get("n_samples") or 500)
    per_side = int(opts.get("qubits_per_side") or 1)
    separable = bool(opts.get("separable", False))
    space = TensorSpace.qubits(2 * per_side)
    sites_1, sites_2 = list(range(per_side)), list(range(per_side, 2 * per_side))
    result = bell_survey(space, sites_1, sites_2, n_samples, seed, separable,
                         replace(settings.search, seed=seed), tol)
    data = encode_survey(result)
    data.update({"n_samples": n_samples, "seed": seed, "separable": separable,
                 "qubits_per_side": per_side})
    outcome = Outcome(command="survey",
                      summary={"Samples": n_samples, "Bell-correlated fraction": f"{result.fraction:.12g}"})
    return data, outcome


def _decode_box(data: Any, path: str) -> SamplingBox:
    obj = require_object(data, path)
    check_fields(obj, ("low", "high"), (), path)
    low = [as_number(v, f"{path}.low[{i}]") for i, v in enumerate(obj["low"])]
    high = [as_number(v, f"{path}.high[{i}]") for i, v in enumerate(obj["high"])]
    try:
        return SamplingBox(tuple(low), tuple(high))
    except CcpnetError as e:
        raise SchemaError(str(e), path)


def _default_box(v1: Region, v2: Region) -> SamplingBox:
    if isinstance(v1, DoubleCone) and isinstance(v2, DoubleCone):
        tight = SamplingBox.around(v1, v2)
        span = max(h - l for l, h in zip(tight.low, tight.high))
        return SamplingBox.around(v1, v2, margin=2.0 * span)
    dim = v1.dim or v2.dim or 1
    return SamplingBox((-_DEFAULT_BOX_HALF_WIDTH,) * (dim + 1), (_DEFAULT_BOX_HALF_WIDTH,) * (dim + 1))


def _run_geometry(config: RunConfig, settings: CcpnetConfig, tol: ToleranceConfig,
                  seed: int) -> Tuple[Dict[str, Any], Outcome]:
    query = config.options.get("query") or "spast"
    if query not in GEOMETRY_QUERIES:
        raise ConfigError(f"Unknown geometry query '{query}'. Choose from: {', '.join(GEOMETRY_QUERIES)}")
    payload = _read_input(config, ("v1", "v2"), ("v", "box"))
    v1 = decode_region(payload["v1"], "$.v1")
    v2 = decode_region(payload["v2"], "$.v2")
    box = _decode_box(payload["box"], "$.box") if "box" in payload else _default_box(v1, v2)
    data: Dict[str, Any] = {
        "query": query,
        "seed": seed,
        "regions": {"v1": encode_region(v1), "v2": encode_region(v2)},
        "box": {"low": list(box.low), "high": list(box.high)},
    }

    if query in ("spast", "cpast", "wpast"):
        n = config.samples or settings.emptiness_samples
        region = {"spast": spast, "cpast": cpast, "wpast": wpast}[query](v1, v2)
        analytic = is_empty_analytic(region)
        sampled = is_empty_sampled(region, box, n, seed, tol)
        if analytic is not None and analytic != sampled.holds:
            logger.warning(f"Analytic emptiness ({analytic}) and sampling ({sampled.holds}) disagree")
        empty = analytic if analytic is not None else sampled.holds
        data.update({"verdict": "empty" if empty else "nonempty", "analytic": analytic,
                     "samples": sampled.samples, "sampled": encode_geometry_verdict(sampled)})
    elif query == "separated":
        n = config.samples or settings.geometry_samples
        verdict = spacelike_separated(v1, v2, n, seed, box, tol)
        data.update({"verdict": "separated" if verdict.holds else "not separated",
                     "samples": verdict.samples, "sampled": encode_geometry_verdict(verdict)})
    else:
        if "v" not in payload:
            raise SchemaError("Query 'strength' needs a candidate region 'v'", "$")
        v = decode_region(payload["v"], "$.v")
        n = config.samples or settings.geometry_samples
        data["regions"]["v"] = encode_region(v)
        data.update({"verdict": principle_strength(v, v1, v2, box, n, seed, tol), "samples": n})

    outcome = Outcome(command=f"geometry {query}", summary={"Verdict": data["verdict"], "Samples": data["samples"]})
    return data, outcome


def _run_verify(config: RunConfig, settings: CcpnetConfig, tol: ToleranceConfig,
                seed: int) -> Tuple[Dict[str, Any], Outcome]:
    payload = _read_input(config, ("state", "A", "B", "C"))
    phi = decode_state(payload["state"], "$.state", tol)
    a = decode_projection(payload["A"], "$.A", tol)
    b = decode_projection(payload["B"], "$.B", tol)
    c = decode_projection(payload["C"], "$.C", tol)
    certificate = verify_common_cause(phi, a, b, c, tol)
    data = encode_certificate(certificate)
    data["correlation"] = correlation(phi, a, b, tol)
    outcome = Outcome(
        command="verify-cc",
        valid=certificate.valid,
        summary={
            "Screening residual (C)": f"{certificate.residual_screen_C:.12g}",
            "Screening residual (C perp)": f"{certificate.residual_screen_Cperp:.12g}",
            "Margins": f"{certificate.margin_A:.12g} / {certificate.margin_B:.12g}",
        },
    )
    return data, outcome


_HANDLERS: Dict[str, Handler] = {
    "demo-wccp": _run_demo,
    "bell": _run_bell,
    "survey": _run_survey,
    "geometry": _run_geometry,
    "verify-cc": _run_verify,
}


def _emit(data: Mapping[str, Any], config: RunConfig) -> None:
    text = get_exporter(config.format).export(data, config.output)
    if config.output is None:
        click.echo(text, nl=False)
    else:
        logger.info(f"Wrote {config.output}")


def run(config: RunConfig, gate: Optional[OutcomeGate] = None) -> int:
    """
    Execute one command and write its result.

    Args:
        config: Run configuration
        gate: Outcome gate (a default one prints panels to stderr)

    Returns:
        Exit code (0 success, 2 negative result, 1 failure, 130 interrupted)
    """
    gate = gate or OutcomeGate()
    try:
        settings = get_config()
        tol = settings.tolerances.with_overrides(config.tolerance_overrides)
        seed = config.seed if config.seed is not None else settings.search.seed
        logger.debug(f"Running {config.command} with seed {seed}")
        data, outcome = _HANDLERS[config.command](config, settings, tol, seed)
        _emit(data, config)
    except KeyboardInterrupt:
        logger.info("Operation cancelled by user")
        return 130
    except CcpnetError as e:
        outcome = Outcome(command=config.command, error=e)
        if gate.evaluate(outcome) == "negative":
            _emit({"command": config.command, "error": type(e).__name__, "message": str(e)}, config)
        else:
            logger.error(f"{type(e).__name__}: {e}")
    except Exception as e:
        logger.exception(f"Unexpected error: {e}")
        outcome = Outcome(command=config.command, error=e)

    decision = gate.evaluate(outcome)
    gate.print_decision(decision, outcome)
    return gate.exit_code(decision)


def setup_logging(verbose: bool = False) -> None:
    """Configure logging once for the process."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


class CcpnetGroup(click.Group):
    """Click group whose usage errors exit with 1; exit code 2 is reserved for negative results."""

    group_class = type

    def make_context(self, *args, **kwargs):
        try:
            return super().make_context(*args, **kwargs)
        except click.UsageError as e:
            e.exit_code = 1
            raise

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.exit_code = 1
            raise


_SHARED_OPTIONS = (
    click.option("--seed", type=int, default=None, help="Seed for sampling and search"),
    click.option("--tol", "tolerances", multiple=True, metavar="NAME=VALUE", help="Tolerance override (repeatable)"),
    click.option("--samples", type=click.IntRange(min=1), default=None, help="Geometry sample count"),
    click.option("--out", "output", type=click.Path(dir_okay=False, path_type=Path), default=None,
                 help="Output file (default: stdout)"),
    click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default=None, help="Output format (json)"),
)


def shared_options(func):
    """Run options, accepted before or after the command name."""
    for option in reversed(_SHARED_OPTIONS):
        func = option(func)
    return func


@click.group(cls=CcpnetGroup)
@click.version_option(__version__, "--version", prog_name="ccpnet")
@shared_options
@click.option("-v", "--verbose", is_flag=True, help="Debug logging")
@click.pass_context
def cli(ctx, seed, tolerances, samples, output, fmt, verbose):
    """Common causes in local quantum nets: demos, Bell analysis and geometry."""
    setup_logging(verbose)
    ctx.obj = {"seed": seed, "tolerances": tolerances, "samples": samples, "output": output, "format": fmt}


def _merge_shared(group: Mapping[str, Any], local: Mapping[str, Any]) -> Dict[str, Any]:
    """Command-level values win over group-level ones; tolerance overrides accumulate."""
    merged = {key: local[key] if local.get(key) is not None else group.get(key)
              for key in ("seed", "samples", "output", "format")}
    merged["tolerances"] = tuple(group.get("tolerances") or ()) + tuple(local.get("tolerances") or ())
    return merged


def _invoke(ctx, command: str, shared: Mapping[str, Any], input_path: Optional[str] = None, **options) -> None:
    values = _merge_shared(ctx.obj or {}, shared)
    try:
        config = RunConfig(
            command=command,
            input_path=Path(input_path) if input_path else None,
            seed=values["seed"],
            tolerance_overrides=parse_tolerance_overrides(values["tolerances"]),
            samples=values["samples"],
            output=values["output"],
            format=values["format"] or "json",
            options={k: v for k, v in options.items() if v is not None},
        )
    except ConfigError as e:
        logger.error(str(e))
        ctx.exit(1)
    ctx.exit(run(config))


@cli.group()
def demo():
    """End-to-end demonstrations."""


@demo.command()
@click.option("--sites", type=int, default=None, help="Number of lattice sites")
@click.option("--weight", type=float, default=None, help="Weight of the entangled pair")
@click.option("--rest-bias", type=float, default=None, help="Excited-level weight on the other sites")
@shared_options
@click.pass_context
def wccp(ctx, sites, weight, rest_bias, seed, tolerances, samples, output, fmt):
    """
    Find a common cause localized in the weak past of two double cones.

    Example:
        ccpnet demo wccp --sites 6 --seed 1 --out report.json
    """
    shared = {"seed": seed, "tolerances": tolerances, "samples": samples, "output": output, "format": fmt}
    _invoke(ctx, "demo-wccp", shared, sites=sites, weight=weight, rest_bias=rest_bias)


@cli.command()
@click.argument("input_file", type=click.Path(exists=True, dir_okay=False))
@shared_options
@click.pass_context
def bell(ctx, input_file, seed, tolerances, samples, output, fmt):
    """Lower-bound the Bell correlation of a state across two factor sets."""
    shared = {"seed": seed, "tolerances": tolerances, "samples": samples, "output": output, "format": fmt}
    _invoke(ctx, "bell", shared, input_file)


@cli.command()
@click.option("--n-samples", "-n", type=click.IntRange(min=1), default=500, help="Number of random states")
@click.option("--qubits-per-side", type=click.IntRange(min=1), default=1)
@click.option("--separable", is_flag=True, help="Sample product states instead")
@shared_options
@click.pass_context
def survey(ctx, n_samples, qubits_per_side, separable, seed, tolerances, samples, output, fmt):
    """Fraction of random pure states that are Bell correlated."""
    shared = {"seed": seed, "tolerances": tolerances, "samples": samples, "output": output, "format": fmt}
    _invoke(ctx, "survey", shared, n_samples=n_samples, qubits_per_side=qubits_per_side, separable=separable)


@cli.command()
@click.argument("input_file", required=False, type=click.Path(exists=True, dir_okay=False))
@click.option("--regions", "regions_file", type=click.Path(exists=True, dir_okay=False),
              help="JSON file with the regions v1, v2 (and v, box)")
@click.option("--query", "-q", type=click.Choice(GEOMETRY_QUERIES), default="spast")
@shared_options
@click.pass_context
def geometry(ctx, input_file, regions_file, query, seed, tolerances, samples, output, fmt):
    """
    Decide emptiness of past regions, separation, or principle strength.

    Example:
        ccpnet geometry --query spast --regions complementary_wedges.json
    """
    if input_file and regions_file and Path(input_file) != Path(regions_file):
        raise click.UsageError("Give the regions file once, either as INPUT_FILE or with --regions", ctx=ctx)
    if not (input_file or regions_file):
        raise click.UsageError("Missing regions file: pass --regions PATH", ctx=ctx)
    shared = {"seed": seed, "tolerances": tolerances, "samples": samples, "output": output, "format": fmt}
    _invoke(ctx, "geometry", shared, regions_file or input_file, query=query)


@cli.command("verify-cc")
@click.argument("input_file", type=click.Path(exists=True, dir_okay=False))
@shared_options
@click.pass_context
def verify_cc(ctx, input_file, seed, tolerances, samples, output, fmt):
    """Check the common-cause conditions for a given state, A, B and C."""
    shared = {"seed": seed, "tolerances": tolerances, "samples": samples, "output": output, "format": fmt}
    _invoke(ctx, "verify-cc", shared, input_file)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Main entry point for the CLI application.

    Returns:
        Exit code
    """
    try:
        rv = cli.main(args=list(argv) if argv is not None else None, prog_name="ccpnet", standalone_mode=False)
    except click.exceptions.Abort:
        return 130
    except click.ClickException as e:
        e.show()
        return 1
    return rv if isinstance(rv, int) else 0
