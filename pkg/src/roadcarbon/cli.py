"""Command-line front end: ``roadcarbon design | assess | corpus | analyze``.

Exit codes: 0 success, 1 usage or I/O problem, 2 domain error (infeasible
design, missing emission factors, too few rows to analyse).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

from .config import RunConfig, load_run_config
from .corpus import (
    design_project,
    generate_corpus,
    load_project,
    paired_width_corpus,
    paired_width_test,
    result_row,
    results_dataset,
    save_corpus,
    StageError,
)
from .errors import ConfigError, CorpusFormatError, LoadError, RoadCarbonError
from .lca import assess_project, contributions, read_results_csv, results_to_csv
from .quantities import boq_to_csv
from .stats import AnalysisPlan, corpus_analysis, render_text, report_to_json

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2

RESULT_EXTRA_COLUMNS = (
    "cbr", "annual_esal", "design_life", "base_thickness_mm", "cut_m3", "fill_m3",
    "max_grade_before", "max_grade_after", "slope_reduction", "mean_abs_grade",
    "mean_cross_slope", "bend_count", "crossing_count",
    "uscs_class", "flood_class", "width_class", "ditch_lining",
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for domain errors here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _g(x: float) -> str:
    return f"{x:.6g}"


def _run_config(args) -> RunConfig:
    overrides = {
        "seed": getattr(args, "seed", None),
        "factors": getattr(args, "factors", None),
        "output_dir": getattr(args, "out", None),
    }
    factors = overrides["factors"]
    if factors is not None and not Path(factors).is_file():
        raise FileNotFoundError(f"file not found: {factors}")
    return load_run_config(args.config, overrides)


def _project(args):
    if args.demo:
        with resources.as_file(resources.files("roadcarbon").joinpath("data/demo_project.json")) as p:
            return load_project(p)
    if args.project is None:
        raise UsageError("a project file (or --demo) is required")
    return load_project(args.project)


def _out_dir(cfg: RunConfig, required: bool = False) -> Path | None:
    if cfg.output_dir is None:
        if required:
            raise UsageError("an output directory is required (--out or paths.output_dir)")
        return None
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_design(args) -> int:
    cfg = _run_config(args)
    record = _project(args)
    out = design_project(record, cfg.engine)
    s = out.section
    print(f"project {record.project_id}")
    print("pavement section:")
    print(f"  base thickness (mm)           {_g(s.base_thickness)}")
    print(f"  structural thickness (mm)     {_g(s.structural_thickness)}")
    print(f"  aggregate loss allowance (mm) {_g(s.aggregate_loss_allowance)}")
    print(f"  base modulus (MPa)            {_g(s.base_modulus)}")
    print(f"  effective subgrade M_R (MPa)  {_g(s.effective_subgrade_modulus)}")
    print(f"  seasonal subgrade M_R (MPa)   {', '.join(_g(m) for m in s.seasonal_subgrade_moduli)}")
    print(f"  total damage                  {_g(s.total_damage)}")
    print(f"  base factor clamped           {'yes' if s.k_clamped else 'no'}")
    print("grades:")
    print(f"  max grade before / after cap  {_g(out.max_grade_before)} / {_g(out.max_grade_after)}")
    print(f"  cut / fill (m3)               {_g(out.cut_volume)} / {_g(out.fill_volume)}")
    print("bill of quantities:")
    for item in out.boq.items:
        print(f"  {item.material_id:<16}{_g(item.quantity):>14} {item.unit}")
    print(f"  road area (m2) {_g(out.boq.road_area)}   length (m) {_g(out.boq.road_length)}")
    dest = _out_dir(cfg)
    if dest is not None:
        (dest / f"{record.project_id}.boq.csv").write_text(boq_to_csv(out.boq))
    return EXIT_OK


def cmd_assess(args) -> int:
    cfg = _run_config(args)
    record = _project(args)
    out = design_project(record, cfg.engine)
    db = cfg.engine.factor_db
    impact = assess_project(out.boq, db, cfg.engine.references, cfg.engine.weights)
    completed = replace(record, outputs=replace(out, impact=impact))
    print(f"project {record.project_id}")
    print(f"  embodied (tCO2eq)     {_g(impact.embodied_total)}")
    print(f"  per km (tCO2eq/km)    {_g(impact.per_km)}")
    print(f"  single score          {_g(impact.weighted_single_score)}")
    print("per-material contribution (tCO2eq):")
    for mid, kg in contributions(out.boq, db).items():
        print(f"  {mid:<16}{_g(kg / 1000.0):>14}")
    row = result_row(completed)
    dest = _out_dir(cfg)
    if dest is not None:
        (dest / "results.csv").write_text(results_to_csv([row], RESULT_EXTRA_COLUMNS))
    return EXIT_OK


def cmd_corpus(args) -> int:
    cfg = _run_config(args)
    gen = cfg.generator
    if args.n is not None:
        gen = replace(gen, project_count=args.n)
    dest = _out_dir(cfg, required=True)
    if args.paired_width:
        records = paired_width_corpus(gen, cfg.engine)
    else:
        records = generate_corpus(gen, cfg.engine, jobs=args.jobs)
    save_corpus(records, dest / "corpus")
    done = [r for r in records if r.outputs is not None]
    (dest / "results.csv").write_text(results_to_csv([result_row(r) for r in done], RESULT_EXTRA_COLUMNS))
    failed = [r for r in records if r.failure]
    for r in failed:
        print(f"warning: {r.project_id}: {r.failure}", file=sys.stderr)
    print(f"projects: {len(records)}  completed: {len(done)}  warnings: {len(failed)}")
    if args.paired_width and len(done) >= 4:
        t = paired_width_test(records)
        doc = {"test": t.test, "statistic": t.statistic, "df": list(t.df), "p_value": t.p_value,
               "direction": t.direction, "group_means": t.group_means, "group_sizes": t.group_sizes}
        (dest / "paired_width_test.json").write_text(json.dumps(doc, indent=2) + "\n")
        print(f"paired width test: t={_g(t.statistic)} p={_g(t.p_value)} direction={t.direction}")
    print(f"written: {dest / 'corpus'}, {dest / 'results.csv'}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg = _run_config(args)
    plan = cfg.plan
    if args.plan is not None:
        path = Path(args.plan)
        if not path.is_file():
            raise FileNotFoundError(f"file not found: {path}")
        try:
            plan = AnalysisPlan.from_dict(json.loads(path.read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    path = Path(args.results)
    if not path.is_file():
        raise FileNotFoundError(f"file not found: {path}")
    rows = read_results_csv(path)
    report = corpus_analysis(results_dataset(rows), plan)
    text = render_text(report)
    print(text, end="")
    dest = _out_dir(cfg)
    if dest is not None:
        (dest / "report.json").write_text(report_to_json(report))
        (dest / "report.txt").write_text(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# wiring
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output directory (overrides paths.output_dir)")

    parser = _Parser(prog="roadcarbon", description="Design aggregate roads and estimate embodied emissions.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, helptext in (("design", "design one project and print the section and BoQ"),
                           ("assess", "design and assess one project")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("project", nargs="?", help="project JSON document")
        p.add_argument("--demo", action="store_true", help="use the bundled demo project")
        if name == "assess":
            p.add_argument("--factors", help="emission factor CSV (default: bundled demo factors)")
        p.set_defaults(func=cmd_design if name == "design" else cmd_assess)

    p = sub.add_parser("corpus", parents=[common], help="generate and run a synthetic corpus")
    p.add_argument("--seed", type=int)
    p.add_argument("--factors")
    p.add_argument("-n", type=int, help="number of projects")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--paired-width", action="store_true",
                   help="design every project at both 3.5 m and 4.0 m")
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("analyze", parents=[common], help="statistical report on a results CSV")
    p.add_argument("results", help="results CSV written by 'corpus'")
    p.add_argument("--plan", help="analysis plan JSON")
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        msg = str(exc) if str(exc).startswith("file not found") else f"file not found: {exc.filename or exc}"
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, ConfigError, CorpusFormatError, LoadError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except RoadCarbonError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
