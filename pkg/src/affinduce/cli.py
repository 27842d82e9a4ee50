"""Operator-facing pipeline runner.

Commands: ``validate | induce | badset | ergodic | all``. Every report
embeds the tool version, the semantic configuration, and the definitional
caveats, and identical (map, config, seed) runs produce byte-identical
bundles; worker count and output location are execution details and are
deliberately left out of the echo.

Exit codes: 0 success, 1 invalid input or missing dependency, 2 budget or
construction exhaustion, 3 hypothesis-gate rejection.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

from . import __version__
from .badset import (
    BadSetApprox,
    absorbing_detect,
    bad_set,
    critical_chains,
    depth_profile,
    extended_bad_set,
    near_invariance_check,
    tube,
)
from .ergodic import (
    coherence_check,
    conservativity_test,
    density_l1_between,
    ergodicity_test,
    ulam_model,
)
from .exact import Rat, rat, rat_str
from .induce import (
    ForestInvariantError,
    GoodForest,
    enumerate_good,
    induced_map,
    markov_residual_curve,
)
from .nice import ConstructionFailure, NiceNbhd, build_nice
from .pamap import BudgetError, MapSpecError, PAMap, expansion_report, find_renormalization

CAVEATS = [
    "niceness is certified as: forward orbits of component boundary points never re-enter the open neighborhood",
    "good interval: an interval mapped affinely and bijectively onto a neighborhood component at its minimal iterate; no first-return condition is imposed",
    "renormalization detection uses the restrictive-interval notion; a miss is evidence, not a proof of non-renormalizability",
    "all almost-everywhere / absorbing verdicts are finite-horizon evidence, never limit claims",
]


class GateRejection(RuntimeError):
    """Input violates the non-renormalizability hypothesis the verdicts need."""


class DependencyError(RuntimeError):
    """A command needs an artifact an earlier command has not produced."""


@dataclass
class RunConfig:
    map_path: str
    command: str
    mesh: Rat = Fraction(1, 4)
    horizon: int = 10
    cells: int = 64
    samples: int = 1000
    seed: int = 0
    lap_budget: int = 250_000
    digit_budget: int = 20_000
    goods_budget: int = 2_000_000
    orbit_cap: int = 10_000
    out: str = "out"
    threads: int = 1
    allow_renormalizable: bool = False
    induce_first: bool = False
    renorm_pmax: int = 8
    nice_depth: int = 6
    levels: int = 2
    burn: int = 256
    tail: int = 128
    conserv_horizon: int = 1000
    ergodic_samples: int = 8
    ergodic_horizon: int = 100_000
    ergodic_cells: int = 32
    residual_threshold: Rat = Fraction(1, 8)

    def echo(self) -> dict:
        """Semantic configuration only: no worker counts, no output paths."""
        skip = {"out", "threads"}
        doc = {}
        for key, value in asdict(self).items():
            if key in skip:
                continue
            doc[key] = rat_str(value) if isinstance(value, Fraction) else value
        return doc


class Bundle:
    """Writes one command's deterministic report files."""

    def __init__(self, cfg: RunConfig, watermark: dict | None):
        self.cfg = cfg
        self.dir = Path(cfg.out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.watermark = watermark

    def envelope(self) -> dict:
        doc = {
            "tool": "affinduce",
            "version": __version__,
            "config": self.cfg.echo(),
            "caveats": CAVEATS,
        }
        if self.watermark is not None:
            doc["renormalizable_input"] = self.watermark
        return doc

    def write_json(self, name: str, payload: dict) -> None:
        doc = self.envelope()
        doc.update(payload)
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
        (self.dir / name).write_text(text)

    def write_csv(self, name: str, header: list[str], rows: list[list]) -> None:
        with open(self.dir / name, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_validate(cfg: RunConfig) -> int:
    try:
        m = PAMap.from_file(cfg.map_path)
    except FileNotFoundError:
        print(f"map spec not found: {cfg.map_path}", file=sys.stderr)
        return 1
    except MapSpecError as exc:
        print(f"invalid map spec: {exc}", file=sys.stderr)
        return 1
    bundle = Bundle(cfg, None)
    bundle.write_json(
        "validate.json",
        {
            "valid": True,
            "phase": m.phase.to_json(),
            "breakpoints": [rat_str(q) for q in m.breakpoints],
            "critical_points": [rat_str(c) for c in m.critical_points],
            "full_branch": m.is_full_branch,
        },
    )
    print(f"valid map: {len(m.branches)} branches, "
          f"critical set {{{', '.join(rat_str(c) for c in m.critical_points)}}}")
    return 0


def _load_map_and_gate(cfg: RunConfig) -> tuple[PAMap, dict | None]:
    m = PAMap.from_file(cfg.map_path)
    renorm = find_renormalization(m, cfg.renorm_pmax, lap_budget=cfg.lap_budget)
    if renorm is None:
        return m, None
    if not cfg.allow_renormalizable:
        raise GateRejection(
            f"renormalization detected at period {renorm.period} "
            f"(restrictive interval {renorm.interval!r}); "
            "pass --allow-renormalizable to analyze anyway"
        )
    return m, renorm.to_json()


def _run_induce(cfg: RunConfig, m: PAMap, bundle: Bundle) -> tuple[NiceNbhd, GoodForest]:
    mesh = cfg.mesh
    last_error: ForestInvariantError | None = None
    for _ in range(3):  # halve the mesh and retry if nesting verification fails
        nbhd = build_nice(m, mesh, cap=cfg.nice_depth, orbit_cap=cfg.orbit_cap)
        try:
            forest = enumerate_good(
                m,
                nbhd,
                cfg.horizon,
                goods_budget=cfg.goods_budget,
                digit_budget=cfg.digit_budget,
            )
            break
        except ForestInvariantError as exc:
            last_error = exc
            mesh = mesh / 2
    else:
        raise last_error  # type: ignore[misc]

    induced = induced_map(forest)
    curve = markov_residual_curve(
        m,
        nbhd,
        list(range(1, cfg.horizon + 1)),
        threshold=cfg.residual_threshold,
        goods_budget=cfg.goods_budget,
        digit_budget=cfg.digit_budget,
    )
    bundle.write_json("nice.json", {"nice": nbhd.to_json()})
    bundle.write_json("forest.json", {"forest": forest.to_json()})
    bundle.write_json("induced.json", {"induced": induced.to_json()})
    bundle.write_json("markov.json", {"residual_curve": curve.to_json()})
    bundle.write_csv(
        "residuals.csv",
        ["horizon", "residual", "residual_float"],
        [[h, rat_str(r), float(r)] for h, r in curve.rows],
    )
    print(
        f"induced map at horizon {forest.horizon}: {len(forest.branches)} branches, "
        f"residual {rat_str(induced.residual)} ({float(induced.residual):.3g}), "
        f"verdict {curve.verdict}"
    )
    return nbhd, forest


def _load_forest(cfg: RunConfig, m: PAMap) -> GoodForest:
    path = Path(cfg.out) / "forest.json"
    if not path.exists():
        raise DependencyError(
            f"no forest at {path}; run the induce command first or pass --induce-first"
        )
    doc = json.loads(path.read_text())
    return GoodForest.from_json(doc["forest"], m)


def _run_badset(cfg: RunConfig, m: PAMap, forest: GoodForest, bundle: Bundle) -> None:
    core = bad_set(forest)
    chains = critical_chains(forest)
    levels: list[BadSetApprox] = [
        extended_bad_set(m, forest, n, chains) for n in range(cfg.levels + 1)
    ]
    tubes = []
    for c, chain in sorted(chains.items()):
        for entry in chain.chain:
            tubes.append(
                {"critical": rat_str(c), "depth": entry.depth, "tube": tube(m, forest, entry).to_json()}
            )
    invariance = [near_invariance_check(m, approx).to_json() for approx in [core, *levels]]
    profile = depth_profile(forest, max(cfg.levels + 2, 4)) if not forest.pruned else None
    absorbing = absorbing_detect(
        m,
        core,
        samples=cfg.samples,
        burn=cfg.burn,
        tail=cfg.tail,
        seed=cfg.seed,
        digit_budget=cfg.digit_budget,
    )
    bundle.write_json(
        "badset.json",
        {
            "core": core.to_json(),
            "extended": [lv.to_json() for lv in levels],
            "chains": {rat_str(c): ch.to_json() for c, ch in sorted(chains.items())},
        },
    )
    bundle.write_json("tubes.json", {"tubes": tubes})
    bundle.write_json("near_invariance.json", {"reports": invariance})
    bundle.write_json("absorbing.json", {"absorbing": absorbing.to_json()})
    if profile is not None:
        bundle.write_csv(
            "depth_profile.csv",
            ["k", "measure", "measure_float"],
            [[k, rat_str(v), float(v)] for k, v in profile],
        )
    print(
        f"bad-core measure {rat_str(core.measure)} ({float(core.measure):.3g}); "
        f"absorbing fraction {float(absorbing.fraction):.3g} "
        f"({absorbing.retained}/{absorbing.samples})"
    )


def _run_ergodic(cfg: RunConfig, m: PAMap, nbhd: NiceNbhd, bundle: Bundle) -> None:
    coarse = ulam_model(m, cfg.cells)
    fine = ulam_model(m, 2 * cfg.cells)
    stability = density_l1_between(coarse, fine, float(m.phase.length))
    target = nbhd.sorted_components()[0][1]
    cons = conservativity_test(
        m, target, cfg.samples, cfg.conserv_horizon, cfg.seed, threads=cfg.threads
    )
    erg = ergodicity_test(
        m,
        cfg.ergodic_samples,
        cfg.ergodic_horizon,
        cfg.ergodic_cells,
        cfg.seed,
        threads=cfg.threads,
    )
    coherence = coherence_check(
        m,
        nbhd,
        cfg.seed,
        horizons=list(range(2, cfg.horizon + 1)) if cfg.horizon >= 4 else None,
        threads=cfg.threads,
        cons=cons,
        erg=erg,
        coarse=coarse,
        fine=fine,
    )
    bundle.write_json(
        "ulam.json",
        {
            "coarse": coarse.to_json(),
            "fine": fine.to_json(),
            "density_l1_between_resolutions": stability,
        },
    )
    bundle.write_csv(
        "density.csv",
        ["cell", "density"],
        [[i, float(v)] for i, v in enumerate(coarse.density)],
    )
    bundle.write_json("conservativity.json", {"conservativity": cons.to_json()})
    bundle.write_json("ergodicity.json", {"ergodicity": erg.to_json()})
    bundle.write_json("coherence.json", {"coherence": coherence.to_json()})
    verdict = "pass" if coherence.passed else ("n/a" if not coherence.applicable else "FAIL")
    print(
        f"ergodic: conservativity {cons.hit_fraction:.3g}, max L1 {erg.max_l1:.3g}, "
        f"tv {coarse.tv:.3g}, coherence {verdict}"
    )


def run(cfg: RunConfig) -> int:
    if cfg.command == "validate":
        return cmd_validate(cfg)
    try:
        m, watermark = _load_map_and_gate(cfg)
    except FileNotFoundError:
        print(f"map spec not found: {cfg.map_path}", file=sys.stderr)
        return 1
    except MapSpecError as exc:
        print(f"invalid map spec: {exc}", file=sys.stderr)
        return 1
    except GateRejection as exc:
        print(str(exc), file=sys.stderr)
        return 3
    bundle = Bundle(cfg, watermark)
    try:
        if cfg.command == "induce":
            _run_induce(cfg, m, bundle)
        elif cfg.command == "badset":
            if cfg.induce_first:
                _, forest = _run_induce(cfg, m, bundle)
            else:
                forest = _load_forest(cfg, m)
            _run_badset(cfg, m, forest, bundle)
        elif cfg.command == "ergodic":
            nbhd = build_nice(m, cfg.mesh, cap=cfg.nice_depth, orbit_cap=cfg.orbit_cap)
            _run_ergodic(cfg, m, nbhd, bundle)
        elif cfg.command == "all":
            nbhd, forest = _run_induce(cfg, m, bundle)
            _run_badset(cfg, m, forest, bundle)
            _run_ergodic(cfg, m, nbhd, bundle)
        else:
            print(f"unknown command {cfg.command}", file=sys.stderr)
            return 1
    except DependencyError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (BudgetError, ConstructionFailure) as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="affinduce",
        description="Induced Markov maps and ergodic diagnostics for piecewise affine interval maps",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("validate", "induce", "badset", "ergodic", "all"):
        p = sub.add_parser(name)
        p.add_argument("map_path", help="path to a map-spec JSON document")
        p.add_argument("--mesh", default="1/4", help="mesh target for the nice neighborhood (p/q)")
        p.add_argument("--horizon", type=int, default=10)
        p.add_argument("--cells", type=int, default=64)
        p.add_argument("--samples", type=int, default=1000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--lap-budget", type=int, default=250_000)
        p.add_argument("--digit-budget", type=int, default=20_000)
        p.add_argument("--out", default="out")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--allow-renormalizable", action="store_true")
        p.add_argument("--induce-first", action="store_true")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    out = os.environ.get("AFFINDUCE_OUT", args.out)
    return RunConfig(
        map_path=args.map_path,
        command=args.command,
        mesh=rat(args.mesh),
        horizon=args.horizon,
        cells=args.cells,
        samples=args.samples,
        seed=args.seed,
        lap_budget=args.lap_budget,
        digit_budget=args.digit_budget,
        out=out,
        threads=args.threads,
        allow_renormalizable=args.allow_renormalizable,
        induce_first=args.induce_first,
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return run(config_from_args(args))


if __name__ == "__main__":
    sys.exit(main())
