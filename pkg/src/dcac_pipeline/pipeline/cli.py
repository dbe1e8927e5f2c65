"""Command line entry point."""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence

from ..config import get_pipeline_config
from ..dispatch import DcVariant
from ..exceptions import PipelineError
from ..feasibility import load_reference_dispatch
from ..grid import load_case
from ..metrics import get_pipeline_metrics
from ..powerflow import AcVariant, SolverOptions
from ..scenarios import ScenarioConfig
from .batch import run_batch
from .results import OutputFormat, build_metadata, emit_results
from .runner import AcStart, PipelineOptions

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_NOT_CONVERGED = 2


def _variants(choice: str, enum):
    return list(enum) if choice == "all" else [enum(choice)]


def build_parser() -> argparse.ArgumentParser:
    config = get_pipeline_config()
    parser = argparse.ArgumentParser(
        prog="dcac-pipeline",
        description=(
            "Run DC dispatch variants through AC power flow variants "
            "and report limit violations."
        ),
    )
    parser.add_argument("--case", required=True, help="MATPOWER case file")
    parser.add_argument("--dc", default="all", choices=[v.value for v in DcVariant] + ["all"])
    parser.add_argument("--ac", default="all", choices=[v.value for v in AcVariant] + ["all"])
    parser.add_argument("--sigma", type=float, default=0.0, help="Relative std of load multipliers")
    parser.add_argument("--samples", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--pf-min", type=float, default=0.95)
    parser.add_argument("--pf-max", type=float, default=1.0)
    parser.add_argument(
        "--nominal",
        action="store_true",
        help="Run the case demand unchanged in every sample (needs sigma 0)",
    )
    parser.add_argument(
        "--tol", type=float, default=config.pf_tol, help="Newton mismatch tolerance (p.u.)"
    )
    parser.add_argument(
        "--eps-q", type=float, default=config.eps_q, help="Reactive limit deadband (p.u.)"
    )
    parser.add_argument(
        "--eps-v", type=float, default=config.eps_v, help="Voltage release deadband (p.u.)"
    )
    parser.add_argument("--max-inner", type=int, default=config.max_inner)
    parser.add_argument("--max-outer", type=int, default=config.max_outer)
    parser.add_argument(
        "--warm-start", default=AcStart.FLAT.value, choices=[s.value for s in AcStart]
    )
    parser.add_argument("--ref", help="Reference dispatch JSON")
    parser.add_argument("--out", default="results", help="Output directory")
    parser.add_argument(
        "--format", default=OutputFormat.CSV.value, choices=[f.value for f in OutputFormat]
    )
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument(
        "--no-timings",
        action="store_true",
        help="Leave wall times empty so repeated runs write identical files",
    )
    parser.add_argument("--log-level", default=config.log_level)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=args.log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        case = get_pipeline_metrics().stage_timer("parse")(load_case)(args.case)
        reference = load_reference_dispatch(args.ref, case) if args.ref else None

        solver = SolverOptions(
            tol=args.tol,
            eps_q=args.eps_q,
            eps_v=args.eps_v,
            max_inner=args.max_inner,
            max_outer=args.max_outer,
        )
        options = PipelineOptions(solver=solver, ac_start=AcStart(args.warm_start))
        scenario_config = ScenarioConfig(
            sigma=args.sigma,
            pf_min=args.pf_min,
            pf_max=args.pf_max,
            n_samples=args.samples,
            seed=args.seed,
            nominal=args.nominal,
        )
        dc_variants = _variants(args.dc, DcVariant)
        ac_variants = _variants(args.ac, AcVariant)

        result = run_batch(
            case,
            dc_variants,
            ac_variants,
            scenario_config,
            options,
            reference=reference,
            workers=args.workers,
        )
        metadata = build_metadata(case.name, dc_variants, ac_variants, scenario_config, options)
        emit_results(
            result.records,
            args.out,
            args.format,
            metadata=metadata,
            summary=result.summary,
            include_timings=not args.no_timings,
        )
    except (PipelineError, ValueError) as e:
        logger.error("%s", e)
        return EXIT_FATAL

    if not result.all_succeeded:
        failed = sum(1 for r in result.records if r.failed_stage is not None)
        logger.warning("%d of %d runs did not complete", failed, len(result.records))
        return EXIT_NOT_CONVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
