"""Command-line front end.

Subcommands: ``nrvalue`` (grid of one-shot subgame values), ``cav`` (concave
envelope value and achieving split at a query point), ``simulate`` (strategy
pair rollout with summary JSON and per-episode CSV), ``example1-gap`` (the
canned no-value experiment).  Data goes to stdout (CSV or JSON); with
``--out DIR`` the same data is written to files together with rendered
figures, and file paths are noted on stderr so stdout stays pipeable.

Exit codes: 0 success, 2 validation problem (bad spec, bad descriptor, bad
query), 3 payoff family without a value oracle.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass
from typing import Callable, Sequence

from .beliefs import BlockEvent, PosteriorState
from .model import Belief, GameSpec, load_spec_json, validate_spec
from .payoffs import (
    Example1Payoff,
    Example2Payoff,
    LimsupAverage,
    PayoffEvaluator,
    evaluator_from_json,
    example1_game,
    example2_game,
)
from .simulate import (
    SimConfig,
    estimate_payoff,
    evaluate_exact,
    iter_episodes,
)
from .solvers import (
    concavify,
    nr_value_average,
    scalar_grid,
    u_example1,
)
from .strategies import (
    ExploitStrategy,
    average_nr_informed,
    average_oracle,
    example1_nr_informed,
    example1_oracle,
    example1_tau_panel,
    example2_oracle,
    make_block_response,
    make_splitting,
    optimal_split_for_cav,
    strategy_from_json,
)


@dataclass
class Family:
    """Per-payoff-family solution ingredients the commands draw on."""

    kind: str
    oracle: object
    nr_informed: Callable[[Belief], object]
    u_scalar: Callable[[float], float] | None
    cav_knots: tuple[float, ...]
    exploit_mode: str


def resolve_family(spec: GameSpec, evaluator: PayoffEvaluator) -> Family:
    if isinstance(evaluator, Example2Payoff):
        return Family(
            kind=evaluator.kind,
            oracle=example2_oracle(spec),
            nr_informed=example1_nr_informed(spec),
            u_scalar=u_example1,
            cav_knots=(1.0 / 3.0, 2.0 / 3.0),
            exploit_mode="density",
        )
    if isinstance(evaluator, Example1Payoff):
        return Family(
            kind=evaluator.kind,
            oracle=example1_oracle(spec),
            nr_informed=example1_nr_informed(spec),
            u_scalar=u_example1,
            cav_knots=(1.0 / 3.0, 2.0 / 3.0),
            exploit_mode="infinitely_often",
        )
    if isinstance(evaluator, LimsupAverage):
        mats = evaluator.matrices
        u = None
        if spec.n_states == 2:
            u = lambda p: nr_value_average(Belief((p, 1.0 - p)), mats)
        return Family(
            kind=evaluator.kind,
            oracle=average_oracle(spec, mats),
            nr_informed=average_nr_informed(spec, mats),
            u_scalar=u,
            cav_knots=(),
            exploit_mode="infinitely_often",
        )
    raise LookupError("no u-oracle for payoff family %r" % (evaluator.kind,))


def _load_spec(value: str) -> tuple[GameSpec, PayoffEvaluator]:
    if value == "example1":
        return example1_game()
    if value == "example2":
        return example2_game()
    try:
        with open(value, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValueError("cannot read spec file %s: %s" % (value, exc))
    spec, payoff = load_spec_json(text)
    problems = validate_spec(spec)
    if problems:
        raise ValueError("invalid spec: " + "; ".join(problems))
    return spec, evaluator_from_json(payoff, spec)


def _ensure_out(args) -> str | None:
    if args.out is None:
        return None
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _note(path: str) -> None:
    print("wrote %s" % path, file=sys.stderr)


def _fmt(v: float) -> str:
    return repr(float(v))


# ---------------------------------------------------------------------------
# nrvalue


def _scalar_samples(family: Family, mesh: float, with_knots: bool):
    if family.u_scalar is None:
        raise LookupError(
            "no u-oracle for payoff family %r on this state space" % (family.kind,)
        )
    xs = scalar_grid(mesh)
    if with_knots and family.cav_knots:
        xs = tuple(sorted(set(xs) | set(family.cav_knots)))
    return xs, tuple(family.u_scalar(x) for x in xs)


def cmd_nrvalue(args) -> int:
    spec, evaluator = _load_spec(args.spec)
    family = resolve_family(spec, evaluator)
    if spec.n_states != 2:
        raise LookupError(
            "no u-oracle for payoff family %r with %d states"
            % (family.kind, spec.n_states)
        )
    xs, vs = _scalar_samples(family, args.mesh, with_knots=False)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["p", "u"])
    for x, v in zip(xs, vs):
        writer.writerow([_fmt(x), _fmt(v)])
    text = buf.getvalue()
    sys.stdout.write(text)
    out = _ensure_out(args)
    if out:
        path = os.path.join(out, "nrvalue.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        _note(path)
        from .figures import save_value_figure

        kx, kv = _scalar_samples(family, args.mesh, with_knots=True)
        env = concavify(kx, kv)
        fig_path = os.path.join(out, "nrvalue.png")
        save_value_figure(
            fig_path,
            kx,
            kv,
            envelope_values=[env.evaluate(x) for x in kx],
        )
        _note(fig_path)
    return 0


# ---------------------------------------------------------------------------
# cav


def _read_u_csv(path: str):
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ValueError("cannot read samples file %s: %s" % (path, exc))
    if not rows or [c.strip() for c in rows[0][:2]] != ["p", "u"]:
        raise ValueError("samples file must start with a 'p,u' header")
    xs, vs = [], []
    for row in rows[1:]:
        if not row:
            continue
        try:
            xs.append(float(row[0]))
            vs.append(float(row[1]))
        except (IndexError, ValueError):
            raise ValueError("malformed samples row %r" % (row,))
    if len(xs) < 2:
        raise ValueError("need at least two sample rows")
    return tuple(xs), tuple(vs)


def cmd_cav(args) -> int:
    q = args.p
    if not 0.0 <= q <= 1.0:
        raise ValueError("query p=%g outside the belief interval [0, 1]" % q)
    if args.u_csv is not None:
        xs, vs = _read_u_csv(args.u_csv)
    else:
        spec, evaluator = _load_spec(args.spec)
        family = resolve_family(spec, evaluator)
        if spec.n_states != 2:
            raise LookupError(
                "no u-oracle for payoff family %r with %d states"
                % (family.kind, spec.n_states)
            )
        xs, vs = _scalar_samples(family, args.mesh, with_knots=True)
    env = concavify(xs, vs)
    value = env.evaluate(q)
    triples = env.split(q)
    report = {
        "p": q,
        "cav": value,
        "split": {
            "weights": [w for _, w, _ in triples],
            "posteriors": [[x, 1.0 - x] for x, _, _ in triples],
            "values": [v for _, _, v in triples],
        },
    }
    print(json.dumps(report, indent=2))
    out = _ensure_out(args)
    if out:
        path = os.path.join(out, "cav.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
        _note(path)
        from .figures import save_value_figure

        fig_path = os.path.join(out, "cav.png")
        save_value_figure(
            fig_path,
            xs,
            vs,
            envelope_values=[env.evaluate(x) for x in xs],
            marks=[(x, v) for x, _, v in triples] + [(q, value)],
        )
        _note(fig_path)
    return 0


# ---------------------------------------------------------------------------
# simulate


def _load_descriptor(raw: str) -> dict:
    if raw.startswith("@"):
        try:
            with open(raw[1:], "r", encoding="utf-8") as fh:
                raw = fh.read()
        except OSError as exc:
            raise ValueError("cannot read descriptor file: %s" % exc)
    try:
        d = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ValueError("descriptor is not valid JSON: %s" % exc)
    if not isinstance(d, dict):
        raise ValueError("descriptor must be a JSON object")
    return d


def _build_pair(spec, family, sd: dict, td: dict, args):
    """Build (sigma, tau) respecting descriptor dependencies."""
    sigma_needs_tau = sd.get("kind") == "example1_exploit"
    tau_needs_sigma = td.get("kind") == "block_response"
    if sigma_needs_tau and tau_needs_sigma:
        raise ValueError(
            "circular descriptors: the punishment construction needs the "
            "opponent and block_response needs the informed strategy"
        )
    split_plan = None
    if sd.get("kind") == "splitting":
        if family.u_scalar is None or spec.n_states != 2:
            raise LookupError(
                "no u-oracle for payoff family %r; cannot build a splitting plan"
                % (family.kind,)
            )
        xs, vs = _scalar_samples(family, args.mesh, with_knots=True)
        env = concavify(xs, vs)
        split_plan = optimal_split_for_cav(
            spec, spec.prior, env, family.nr_informed
        )
    common = dict(
        oracle=family.oracle,
        split_plan=split_plan,
        epsilon=args.epsilon,
        seed=args.seed,
        exploit_mode=family.exploit_mode,
    )
    if sigma_needs_tau:
        tau = strategy_from_json(spec, td, "ii", **common)
        sigma = strategy_from_json(spec, sd, "i", opponent=tau, **common)
    else:
        sigma = strategy_from_json(spec, sd, "i", **common)
        tau = strategy_from_json(spec, td, "ii", opponent=sigma, **common)
    return sigma, tau


def _episode_rows(spec, evaluator, sigma, tau, config):
    rows = []
    for ep, res in iter_episodes(spec, evaluator, sigma, tau, config):
        events = getattr(res.j_cursor, "events", None) or []
        blocks = sum(1 for _, ev in events if ev is BlockEvent.NEW_BLOCK)
        theta = next(
            (t for t, ev in events if ev is BlockEvent.BOUNDARY), None
        )
        from .simulate import stream_seed

        rows.append(
            [
                stream_seed(config.seed, ep, "nature"),
                spec.states[res.state],
                _fmt(res.payoff),
                int(res.exact),
                blocks,
                "" if theta is None else theta,
            ]
        )
    return rows


def cmd_simulate(args) -> int:
    spec, evaluator = _load_spec(args.spec)
    family = resolve_family(spec, evaluator)
    sd = _load_descriptor(args.sigma)
    td = _load_descriptor(args.tau)
    sigma, tau = _build_pair(spec, family, sd, td, args)
    config = SimConfig(
        horizon=args.horizon, episodes=args.episodes, seed=args.seed
    )
    result = estimate_payoff(spec, evaluator, sigma, tau, config)
    summary = {
        "mean": result.mean,
        "stderr": result.stderr,
        "ci95": result.ci95,
        "episodes": result.episodes,
        "horizon": result.horizon,
        "seed": result.seed,
        "exact_fraction": result.exact_fraction,
        "per_state": {
            s: {"mean": m, "episodes": n} for s, (m, n) in result.per_state.items()
        },
        "block_stats": result.block_stats,
    }
    print(json.dumps(summary, indent=2))
    out = _ensure_out(args)
    if out:
        path = os.path.join(out, "summary.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")
        _note(path)
        ep_path = os.path.join(out, "episodes.csv")
        with open(ep_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["seed", "k_star", "payoff", "exact", "blocks", "theta_stage"]
            )
            writer.writerows(
                _episode_rows(spec, evaluator, sigma, tau, config)
            )
        _note(ep_path)
        trajs = []
        rec = SimConfig(
            horizon=min(args.horizon, 200),
            episodes=min(args.episodes, 5),
            seed=args.seed,
            record=True,
        )
        for _, res in iter_episodes(spec, evaluator, sigma, tau, rec):
            ps = PosteriorState(spec, sigma)
            traj = [ps.belief[0]]
            for pair in res.pairs or ():
                ps.update(pair)
                traj.append(ps.belief[0])
            trajs.append(traj)
        from .figures import save_belief_figure

        fig_path = os.path.join(out, "beliefs.png")
        save_belief_figure(fig_path, trajs)
        _note(fig_path)
    return 0


# ---------------------------------------------------------------------------
# example1-gap


def cmd_example1_gap(args) -> int:
    if args.variant == "example2":
        spec, evaluator = example2_game()
    else:
        spec, evaluator = example1_game()
    family = resolve_family(spec, evaluator)
    xs, vs = _scalar_samples(family, args.mesh, with_knots=True)
    env = concavify(xs, vs)
    plan = optimal_split_for_cav(spec, spec.prior, env, family.nr_informed)
    sigma_star = make_splitting(spec, spec.prior, plan)
    tau_star = make_block_response(
        spec, sigma_star, epsilon=args.epsilon, oracle=family.oracle
    )
    config = SimConfig(
        horizon=args.horizon, episodes=args.episodes, seed=args.seed
    )
    maxmin = estimate_payoff(spec, evaluator, sigma_star, tau_star, config)
    panel_rows = []
    for name, tau in example1_tau_panel(spec, seed=args.seed):
        exploit = ExploitStrategy(
            spec,
            tau,
            switch_stage=8,
            seed=args.seed,
            mode=family.exploit_mode,
        )
        pv = evaluate_exact(
            spec, evaluator, exploit, tau, horizon=args.horizon, seed=args.seed
        )
        if pv.all_exact:
            panel_rows.append(
                {"tau": name, "value": pv.value, "exact": True}
            )
        else:
            est = estimate_payoff(spec, evaluator, exploit, tau, config)
            panel_rows.append(
                {
                    "tau": name,
                    "value": est.mean,
                    "exact": False,
                    "ci95": est.ci95,
                }
            )
    bound = min(r["value"] for r in panel_rows)
    report = {
        "variant": args.variant,
        "p": spec.prior[0],
        "maxmin_side": maxmin.mean,
        "maxmin_ci95": maxmin.ci95,
        "maxmin_exact_fraction": maxmin.exact_fraction,
        "minmax_side_panel_bound": bound,
        "panel": panel_rows,
        "gap_witnessed": bound - maxmin.mean >= 0.1,
        "seed": args.seed,
        "episodes": args.episodes,
        "horizon": args.horizon,
        "notes": (
            "maxmin_side is a lower-bound witness from the constructed pair; "
            "minmax_side_panel_bound is a bound over the listed panel only, "
            "not over all opponent strategies"
        ),
    }
    print(json.dumps(report, indent=2))
    out = _ensure_out(args)
    if out:
        path = os.path.join(out, "gap.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
        _note(path)
        from .figures import save_gap_figure

        fig_path = os.path.join(out, "gap.png")
        save_gap_figure(
            fig_path,
            maxmin.mean,
            {r["tau"]: r["value"] for r in panel_rows},
        )
        _note(fig_path)
    return 0


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed")
    common.add_argument(
        "--horizon", type=int, default=1000, help="stages per episode"
    )
    common.add_argument(
        "--episodes", type=int, default=100, help="episodes per estimate"
    )
    common.add_argument(
        "--mesh", type=float, default=0.05, help="belief grid mesh"
    )
    common.add_argument(
        "--epsilon", type=float, default=0.05, help="block response accuracy"
    )
    common.add_argument(
        "--out", default=None, help="directory for files and figures"
    )
    parser = argparse.ArgumentParser(
        prog="tailgame",
        description="repeated games with one-sided information: values, "
        "splits, block responses, gap experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "nrvalue",
        parents=[common],
        help="grid of one-shot subgame values (CSV)",
    )
    p.add_argument(
        "--spec",
        required=True,
        help="spec JSON path, or builtin name example1/example2",
    )
    p.set_defaults(fn=cmd_nrvalue)

    p = sub.add_parser(
        "cav",
        parents=[common],
        help="concave envelope value and achieving split at a point",
    )
    p.add_argument("--spec", default=None, help="spec JSON path or builtin name")
    p.add_argument(
        "--u-csv", default=None, help="sampled (p,u) CSV instead of a spec"
    )
    p.add_argument("--p", type=float, default=0.5, help="query point")
    p.set_defaults(fn=cmd_cav)

    p = sub.add_parser(
        "simulate",
        parents=[common],
        help="run a strategy pair; summary JSON plus per-episode CSV",
    )
    p.add_argument("--spec", required=True, help="spec JSON path or builtin name")
    p.add_argument(
        "--sigma", required=True, help="informed strategy descriptor (JSON or @file)"
    )
    p.add_argument(
        "--tau", required=True, help="uninformed strategy descriptor (JSON or @file)"
    )
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser(
        "example1-gap",
        parents=[common],
        help="canned no-value experiment: maxmin side versus punished panel",
    )
    p.add_argument(
        "--variant",
        choices=["example1", "example2"],
        default="example1",
        help="event variant or density variant",
    )
    p.set_defaults(fn=cmd_example1_gap)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "cav" and args.u_csv is None and args.spec is None:
        print("error: cav needs --spec or --u-csv", file=sys.stderr)
        return 2
    try:
        return args.fn(args)
    except LookupError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
