"""Experiment runner: the whole library behind one argv interface.

Eight subcommands: info, graph, simulate-bc, simulate-gw, region, wyner,
blackwell-demo, sweep.  Every result is canonical JSON (sorted keys, fixed
indentation, no timestamps), so a repeated run with the same command line
and seed produces byte-identical output.  Sweeps additionally write a CSV
table, and any report sent to --out renders its figures next to the JSON
unless --no-figures is given.

Exit status: 0 on success, 1 on argument or input validation failure
(nothing is written in that case), 2 when a resource guard trips.

Config files are plain text with one "key value" pair per line and '#'
comments; keys are long option names without the leading dashes, a boolean
option is enabled with "key true", and explicit command line flags override
config values.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import random
import sys
from pathlib import Path

import numpy as np

from . import figures
from .bigraph import (GraphParams, ResourceLimitError, are_isomorphic,
                      block_decompose, from_joint_support, load_graph,
                      validate)
from .broadcast import (AuxChain, BroadcastChannel, ChannelCodeConfig,
                        blackwell_channel, blackwell_exact_code,
                        build_channel_code, estimate_error_rate,
                        exact_code_error, full_support_blackwell_aux,
                        identity_channel, matched_blackwell_aux)
from .graywyner import (GwCodeConfig, SourcePair, build_gw_code,
                        constant_common_layer, estimate_gw_error,
                        gw_rate_facts, revealing_common_layer,
                        triangular_source)
from .probability import (ConditionalPmf, JointPmf, entropy, extend,
                          load_pmf, mutual_information)
from .typicality import TypicalityParams, count_bounds
from .regions import (KINDS, RateTuple5, RegionSpec, evaluate_constraints,
                      membership, point_slacks, satisfies,
                      separation_gap_check, wyner_common_information)

SCHEMA_VERSION = 1

MAX_SEEDS = 64
MAX_TRIALS = 200000
MAX_BLOCK_LENGTH = 16
MAX_LADDER_STEPS = 8
MAX_SWEEP_STEPS = 64
MAX_SWEEP_BLOCK_LENGTH = 10
MAX_RESTARTS = 2000


class CliError(Exception):
    """Argument or input validation failure; maps to exit status 1."""


class _Parser(argparse.ArgumentParser):
    # argparse would sys.exit(2) here; route everything through CliError so
    # the exit-status contract (1 = validation) holds for bad flags too
    def error(self, message):
        raise CliError(message)


# ---------------------------------------------------------------------------
# input resolution


def _load_joint_file(path, axes):
    try:
        pmf = load_pmf(path)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from None
    if not isinstance(pmf, JointPmf):
        raise CliError(f"{path}: expected a joint pmf")
    if len(pmf.axes) != axes:
        raise CliError(f"{path}: expected a joint pmf over {axes} axes")
    return pmf


def _load_cond_file(path, given, output):
    try:
        pmf = load_pmf(path)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from None
    if not isinstance(pmf, ConditionalPmf):
        raise CliError(f"{path}: expected a conditional pmf")
    if len(pmf.given_axes) != given or len(pmf.output_axes) != output:
        raise CliError(f"{path}: expected {given} conditioning and "
                       f"{output} output axes")
    return pmf


def _resolve_source(spec: str) -> SourcePair:
    if spec == "triangular":
        return triangular_source()
    joint = _load_joint_file(spec, 2)
    return SourcePair(joint.axes[0], joint.axes[1], joint)


def _resolve_channel(spec: str) -> BroadcastChannel:
    if spec == "blackwell":
        return blackwell_channel()
    if spec == "identity" or spec.startswith("identity:"):
        size = 2 if spec == "identity" else int(spec.split(":", 1)[1])
        return identity_channel(size)
    cond = _load_cond_file(spec, 1, 2)
    return BroadcastChannel(cond.given_axes[0], cond.output_axes[0],
                            cond.output_axes[1], cond)


def _resolve_input_law(spec: str, channel: BroadcastChannel) -> JointPmf:
    size = channel.x_alphabet.size
    if spec == "uniform":
        return JointPmf((channel.x_alphabet,), np.full(size, 1.0 / size))
    law = _load_joint_file(spec, 1)
    if law.axes[0].size != size:
        raise CliError(f"input law has {law.axes[0].size} symbols, "
                       f"channel expects {size}")
    return law


def _resolve_layer(spec: str, source: SourcePair) -> ConditionalPmf:
    if spec == "constant":
        return constant_common_layer(source)
    if spec == "revealing":
        return revealing_common_layer(source)
    layer = _load_cond_file(spec, 2, 1)
    want = (source.s_alphabet.size, source.t_alphabet.size)
    if layer.given_sizes != want:
        raise CliError(f"layer conditions on {layer.given_sizes}, "
                       f"source pair is {want}")
    return layer


def _bc_aux(args):
    custom = (args.aux_pz, args.aux_puv, args.aux_px)
    if any(custom):
        if not all(custom):
            raise CliError("a custom aux chain needs --aux-pz, --aux-puv "
                           "and --aux-px together")
        return AuxChain(_load_joint_file(args.aux_pz, 1),
                        _load_cond_file(args.aux_puv, 1, 2),
                        _load_cond_file(args.aux_px, 3, 1)), "custom"
    if args.aux == "matched":
        return matched_blackwell_aux(), args.aux
    if args.aux == "full-support":
        return full_support_blackwell_aux(), args.aux
    raise CliError(f"unknown aux preset {args.aux!r}")


# ---------------------------------------------------------------------------
# value parsing and resource guards


def _parse_seeds(text: str) -> list:
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
            if hi < lo:
                raise CliError("seed range end is below its start")
            seeds = list(range(lo, hi + 1))
        else:
            seeds = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise CliError(f"cannot parse seeds {text!r}; use A..B or a,b,c") \
            from None
    if not seeds:
        raise CliError("at least one seed is required")
    if len(seeds) > MAX_SEEDS:
        raise ResourceLimitError(f"{len(seeds)} seeds exceed the cap of "
                                 f"{MAX_SEEDS}")
    return seeds


def _parse_ladder(text: str, cap: int) -> list:
    try:
        values = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise CliError(f"cannot parse block lengths {text!r}") from None
    if not values:
        raise CliError("at least one block length is required")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise CliError("block lengths must be strictly increasing")
    if values[0] < 1:
        raise CliError("block lengths must be positive")
    if len(values) > MAX_LADDER_STEPS:
        raise ResourceLimitError(f"{len(values)} block lengths exceed the "
                                 f"cap of {MAX_LADDER_STEPS}")
    if values[-1] > cap:
        raise ResourceLimitError(f"block length {values[-1]} exceeds the "
                                 f"cap of {cap}")
    return values


def _parse_point(text: str) -> RateTuple5:
    parts = [t.strip() for t in text.split(",")]
    if len(parts) != 5:
        raise CliError("--point needs five comma-separated rates "
                       "r0,r1,r2,r1p,r2p")
    try:
        values = [float(t) for t in parts]
    except ValueError:
        raise CliError(f"cannot parse rate point {text!r}") from None
    return RateTuple5(*values)


def _check_trials(trials: int) -> int:
    if trials < 1:
        raise CliError("trials must be positive")
    if trials > MAX_TRIALS:
        raise ResourceLimitError(f"{trials} trials exceed the cap of "
                                 f"{MAX_TRIALS}")
    return trials


def _check_restarts(restarts: int) -> int:
    if restarts < 1:
        raise CliError("restarts must be positive")
    if restarts > MAX_RESTARTS:
        raise ResourceLimitError(f"{restarts} restarts exceed the cap of "
                                 f"{MAX_RESTARTS}")
    return restarts


def _check_threads(threads: int) -> int:
    if threads < 1:
        raise CliError("threads must be positive")
    return threads


# ---------------------------------------------------------------------------
# config files


def _config_argv(path) -> list:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}") from None
    out = []
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 1)
        if len(parts) != 2:
            raise CliError(f"config line {line!r} is not 'key value'")
        key, value = parts
        flag = "--" + key.replace("_", "-")
        low = value.strip().lower()
        if low in ("true", "yes"):
            out.append(flag)
        elif low in ("false", "no"):
            continue
        else:
            out.extend([flag, value.strip()])
    return out


def _strip_config(argv: list) -> list:
    out = []
    skip = False
    for token in argv:
        if skip:
            skip = False
            continue
        if token == "--config":
            skip = True
            continue
        if token.startswith("--config="):
            continue
        out.append(token)
    return out


# ---------------------------------------------------------------------------
# serialization helpers


def _aux_payload(aux):
    if isinstance(aux, AuxChain):
        return {"pz": aux.pz.mass.tolist(),
                "puv_given_z": aux.puv_given_z.rows.tolist(),
                "px_given_zuv": aux.px_given_zuv.rows.tolist()}
    if isinstance(aux, ConditionalPmf):
        return {"rows": aux.rows.tolist()}
    if isinstance(aux, JointPmf):
        return {"mass": aux.mass.tolist()}
    if isinstance(aux, tuple):
        return {"layers": [layer.rows.tolist() for layer in aux]}
    return None


def _record_payload(record):
    if record is None:
        return None
    return {"direction": record.direction,
            "quantities": {k: float(v) for k, v in record.quantities},
            "bounds": {k: float(v) for k, v in record.bounds}}


def _perm_payload(perm):
    return None if perm is None else [int(p) for p in perm]


# ---------------------------------------------------------------------------
# subcommand runners; each returns (payload body, emission extras)


def _run_info(args):
    if not args.source and not args.channel:
        raise CliError("info needs --source and/or --channel")
    payload = {"parameters": {"source": args.source, "channel": args.channel,
                              "input": args.input}}
    if args.source:
        joint = _resolve_source(args.source).joint
        payload["source"] = {
            "left_alphabet": joint.axes[0].size,
            "right_alphabet": joint.axes[1].size,
            "support_cells": int((joint.mass > 0).sum()),
            "h_left": float(entropy(joint, (0,))),
            "h_right": float(entropy(joint, (1,))),
            "h_pair": float(entropy(joint, (0, 1))),
            "mutual": float(mutual_information(joint, (0,), (1,))),
        }
    if args.channel:
        channel = _resolve_channel(args.channel)
        law = _resolve_input_law(args.input, channel)
        joint = extend(law, channel.transition, (0,))
        payload["channel"] = {
            "x_alphabet": channel.x_alphabet.size,
            "y1_alphabet": channel.y1_alphabet.size,
            "y2_alphabet": channel.y2_alphabet.size,
            "h_y1": float(entropy(joint, (1,))),
            "h_y2": float(entropy(joint, (2,))),
            "h_output_pair": float(entropy(joint, (1, 2))),
            "i_x_y1": float(mutual_information(joint, (0,), (1,))),
            "i_x_y2": float(mutual_information(joint, (0,), (2,))),
            "i_x_pair": float(mutual_information(joint, (0,), (1, 2))),
        }
    return payload, {}


def _graph_params(args, delta0):
    missing = [name for name in ("delta1", "delta2", "delta1p", "delta2p",
                                 "mu") if getattr(args, name) is None]
    if missing:
        raise CliError("missing " + ", ".join("--" + m for m in missing))
    return GraphParams(delta0, args.delta1, args.delta2, args.delta1p,
                       args.delta2p, args.mu)


def _run_graph(args):
    if args.op == "isomorphic":
        if len(args.paths) != 2:
            raise CliError("isomorphic needs exactly two graph files")
        g1, _ = load_graph(args.paths[0])
        g2, _ = load_graph(args.paths[1])
        result = are_isomorphic(g1, g2, node_budget=args.budget)
        payload = {
            "parameters": {"op": args.op, "paths": list(args.paths),
                           "budget": args.budget},
            "isomorphic": bool(result.isomorphic),
            "left_perm": _perm_payload(result.left_perm),
            "right_perm": _perm_payload(result.right_perm),
        }
        return payload, {}
    if len(args.paths) != 1:
        raise CliError(f"{args.op} needs exactly one graph file")
    graph, delta0 = load_graph(args.paths[0])
    params = _graph_params(args, delta0)
    payload = {
        "parameters": {"op": args.op, "paths": list(args.paths),
                       "delta1": args.delta1, "delta2": args.delta2,
                       "delta1p": args.delta1p, "delta2p": args.delta2p,
                       "mu": args.mu},
        "graph": {"v1": graph.v1_size, "v2": graph.v2_size,
                  "edges": graph.edge_count, "delta0": delta0},
    }
    if args.op == "validate":
        report = validate(graph, params)
        payload["passed"] = bool(report.passed)
        payload["size_ok"] = bool(report.size_ok)
        payload["cross_block_edges"] = [
            [int(u), int(v)] for u, v in report.cross_block_edges]
        payload["left_degree_violations"] = [
            [int(v), int(deg)] for v, deg in report.left_degree_violations]
        payload["right_degree_violations"] = [
            [int(v), int(deg)] for v, deg in report.right_degree_violations]
        payload["left_violation_fraction"] = \
            len(report.left_degree_violations) / graph.v1_size
        payload["right_violation_fraction"] = \
            len(report.right_degree_violations) / graph.v2_size
    else:
        blocks = block_decompose(graph, params)
        payload["blocks"] = [{"v1": b.v1_size, "v2": b.v2_size,
                              "edges": b.edge_count} for b in blocks]
    return payload, {}


def _degree_figure_entry(n, graph, report):
    left = graph.left_degrees()
    right = graph.right_degrees()
    left_band = (2.0 ** (n * (report.r1p - report.eps_prime)),
                 2.0 ** (n * (report.r1p + report.eps_prime)))
    right_band = (2.0 ** (n * (report.r2p - report.eps_prime)),
                  2.0 ** (n * (report.r2p + report.eps_prime)))

    def render(path):
        return figures.degree_histogram_figure(path, left, right,
                                               left_band, right_band)

    return ("degrees", render)


def _run_simulate_bc(args):
    channel = _resolve_channel(args.channel)
    aux, aux_name = _bc_aux(args)
    ladder = _parse_ladder(args.n, MAX_BLOCK_LENGTH)
    seeds = _parse_seeds(args.seeds)
    trials = _check_trials(args.trials)
    threads = _check_threads(args.threads)
    runs = []
    mean_taus = []
    per_seed = []
    last = None
    for n in ladder:
        taus = []
        for seed in seeds:
            config = ChannelCodeConfig(
                n=n, eps=args.eps, eps_prime=args.eps_prime,
                r0=args.r0, r1=args.r1, r2=args.r2, aux=aux, seed=seed,
                decode_eps=args.decode_eps, x_draw_eps=args.x_draw_eps,
                enforce_region=not args.no_enforce_region)
            codebook, diag = build_channel_code(channel, config)
            est = estimate_error_rate(codebook, channel, trials,
                                      random.Random(seed), threads=threads)
            taus.append(est.tau)
            runs.append({
                "n": n, "seed": seed,
                "tau": float(est.tau),
                "wilson_low": float(est.wilson_low),
                "wilson_high": float(est.wilson_high),
                "errors": int(est.errors),
                "receiver1_errors": int(est.receiver1_errors),
                "receiver2_errors": int(est.receiver2_errors),
                "realized_r0": float(diag.realized_r0),
                "realized_r1": float(diag.realized_r1),
                "realized_r2": float(diag.realized_r2),
                "edges": int(codebook.graph.edge_count),
                "dropped_edges": int(sum(diag.dropped_edges)),
                "empty_aux_blocks": len(diag.empty_aux_blocks),
                "left_degree_fraction":
                    float(diag.degree_report.left_fraction),
                "right_degree_fraction":
                    float(diag.degree_report.right_fraction),
            })
            last = (n, codebook, diag)
        per_seed.append(taus)
        mean_taus.append(sum(taus) / len(taus))
    payload = {
        "parameters": {"channel": args.channel, "aux": aux_name,
                       "n": ladder, "seeds": seeds, "trials": trials,
                       "eps": args.eps, "eps_prime": args.eps_prime,
                       "r0": args.r0, "r1": args.r1, "r2": args.r2,
                       "threads": threads},
        "runs": runs,
        "summary": {"n": ladder, "mean_tau": [float(v) for v in mean_taus]},
    }
    figure_entries = [("errors", lambda p: figures.error_trend_figure(
        p, ladder, mean_taus, per_seed))]
    if last is not None:
        n_last, codebook, diag = last
        figure_entries.append(_degree_figure_entry(
            n_last, codebook.graph, diag.degree_report))
    fieldnames = ["n", "seed", "tau", "wilson_low", "wilson_high", "errors",
                  "receiver1_errors", "receiver2_errors", "realized_r0",
                  "realized_r1", "realized_r2", "edges", "dropped_edges",
                  "empty_aux_blocks", "left_degree_fraction",
                  "right_degree_fraction"]
    return payload, {"figures": figure_entries, "csv": (fieldnames, runs)}


def _run_simulate_gw(args):
    source = _resolve_source(args.source)
    layer = _resolve_layer(args.aux, source)
    ladder = _parse_ladder(args.n, MAX_BLOCK_LENGTH)
    seeds = _parse_seeds(args.seeds)
    trials = _check_trials(args.trials)
    threads = _check_threads(args.threads)
    runs = []
    mean_taus = []
    per_seed = []
    last = None
    for n in ladder:
        taus = []
        for seed in seeds:
            config = GwCodeConfig(
                n=n, eps=args.eps, eps_prime=args.eps_prime,
                r0=args.r0, r1=args.r1, r2=args.r2, aux=layer, seed=seed,
                build_graph=not args.no_graph)
            codebook, diag = build_gw_code(source, config)
            est = estimate_gw_error(codebook, source, trials,
                                    random.Random(seed), threads=threads)
            taus.append(est.tau)
            record = {
                "n": n, "seed": seed,
                "tau": float(est.tau),
                "wilson_low": float(est.wilson_low),
                "wilson_high": float(est.wilson_high),
                "errors": int(est.errors),
                "fallbacks": int(est.fallbacks),
                "left_errors": int(est.left_errors),
                "right_errors": int(est.right_errors),
                "unreliable": bool(est.unreliable),
                "realized_r0": float(diag.realized_r0),
                "realized_r1": float(diag.realized_r1),
                "realized_r2": float(diag.realized_r2),
            }
            if codebook.graph is not None:
                record["edges"] = int(codebook.graph.edge_count)
                record["left_degree_fraction"] = \
                    float(diag.degree_report.left_fraction)
                record["right_degree_fraction"] = \
                    float(diag.degree_report.right_fraction)
                last = (n, codebook, diag)
            runs.append(record)
        per_seed.append(taus)
        mean_taus.append(sum(taus) / len(taus))
    payload = {
        "parameters": {"source": args.source, "aux": args.aux,
                       "n": ladder, "seeds": seeds, "trials": trials,
                       "eps": args.eps, "eps_prime": args.eps_prime,
                       "r0": args.r0, "r1": args.r1, "r2": args.r2,
                       "graph": not args.no_graph, "threads": threads},
        "runs": runs,
        "summary": {"n": ladder, "mean_tau": [float(v) for v in mean_taus]},
    }
    figure_entries = [("errors", lambda p: figures.error_trend_figure(
        p, ladder, mean_taus, per_seed))]
    if last is not None:
        n_last, codebook, diag = last
        figure_entries.append(_degree_figure_entry(
            n_last, codebook.graph, diag.degree_report))
    fieldnames = ["n", "seed", "tau", "wilson_low", "wilson_high", "errors",
                  "fallbacks", "left_errors", "right_errors", "unreliable",
                  "realized_r0", "realized_r1", "realized_r2", "edges",
                  "left_degree_fraction", "right_degree_fraction"]
    return payload, {"figures": figure_entries, "csv": (fieldnames, runs)}


def _region_aux(args, spec: RegionSpec):
    """Aux object for evaluate mode, or None to run a membership search."""
    kind = spec.kind
    trio = (args.aux_pz, args.aux_puv, args.aux_px)
    if kind not in ("marton", "bc_inner") and any(trio):
        raise CliError("--aux-pz/--aux-puv/--aux-px only apply to marton "
                       "and bc_inner")
    if kind != "semi_det" and args.aux_joint is not None:
        raise CliError("--aux-joint only applies to semi_det")
    if kind != "det_bc" and args.input is not None:
        raise CliError("--input only applies to det_bc")
    if kind not in ("gw_classic", "gw_inner", "gw_outer") \
            and args.layer is not None:
        raise CliError("--layer only applies to the source coding kinds")
    if kind in ("marton", "bc_inner"):
        if not any(trio):
            return None
        if not all(trio):
            raise CliError(f"{kind} evaluation needs --aux-pz, "
                           "--aux-puv and --aux-px together")
        return AuxChain(_load_joint_file(args.aux_pz, 1),
                        _load_cond_file(args.aux_puv, 1, 2),
                        _load_cond_file(args.aux_px, 3, 1))
    if kind == "semi_det" and args.aux_joint is not None:
        return _load_joint_file(args.aux_joint, 2)
    if kind == "det_bc" and args.input is not None:
        return _resolve_input_law(args.input, spec.channel)
    if kind in ("gw_classic", "gw_inner", "gw_outer") \
            and args.layer is not None:
        return _resolve_layer(args.layer, spec.source)
    return None


def _run_region(args):
    channel = _resolve_channel(args.channel) if args.channel else None
    source = _resolve_source(args.source) if args.source else None
    spec = RegionSpec(args.kind, channel=channel, source=source,
                      z_size=args.z_size, u_size=args.u_size,
                      v_size=args.v_size, w_size=args.w_size)
    point = _parse_point(args.point) if args.point else None
    if point is None and args.kind == "han_costa":
        # the display is point-independent; membership doubles as a
        # transmissibility check
        point = RateTuple5(0.0, 0.0, 0.0, 0.0, 0.0)
    aux = _region_aux(args, spec)
    parameters = {"kind": args.kind, "channel": args.channel,
                  "source": args.source, "point": args.point,
                  "tol": args.tol, "restarts": args.restarts,
                  "cycles": args.cycles, "seed": args.seed,
                  "z_size": spec.z_size, "u_size": spec.u_size,
                  "v_size": spec.v_size, "w_size": spec.w_size}
    if aux is not None:
        record = evaluate_constraints(spec, aux)
        payload = {"parameters": parameters, "mode": "evaluate",
                   "record": _record_payload(record)}
        extras = {}
        if point is not None:
            slacks = point_slacks(record, point)
            payload["point"] = list(point.as_tuple())
            payload["slacks"] = {k: float(v) for k, v in slacks}
            payload["satisfied"] = bool(satisfies(record, point,
                                                  tol=args.tol))
            names = [k for k, _ in slacks]
            values = [float(v) for _, v in slacks]
            extras = {"figures": [("slacks", lambda p:
                      figures.slack_bar_figure(p, names, values,
                                               tol=args.tol))]}
        return payload, extras
    if point is None:
        raise CliError("membership needs --point r0,r1,r2,r1p,r2p")
    _check_restarts(args.restarts)
    result = membership(point, spec, restarts=args.restarts,
                        cycles=args.cycles, seed=args.seed, tol=args.tol)
    payload = {
        "parameters": parameters,
        "mode": "membership",
        "point": list(point.as_tuple()),
        "status": result.status,
        "member": bool(result.is_member),
        "margin": float(result.margin),
        "restarts_used": int(result.restarts_used),
        "witness": _aux_payload(result.witness),
        "record": _record_payload(result.record),
    }
    extras = {}
    if result.record is not None:
        slacks = point_slacks(result.record, point)
        payload["slacks"] = {k: float(v) for k, v in slacks}
        names = [k for k, _ in slacks]
        values = [float(v) for _, v in slacks]
        extras = {"figures": [("slacks", lambda p: figures.slack_bar_figure(
            p, names, values, tol=args.tol))]}
    return payload, extras


def _run_wyner(args):
    source = _resolve_source(args.source)
    z_size = args.z_size
    if z_size is None:
        z_size = source.s_alphabet.size * source.t_alphabet.size
    _check_restarts(args.restarts)
    result = wyner_common_information(source, z_size,
                                      restarts=args.restarts,
                                      cycles=args.cycles, seed=args.seed,
                                      cond_tol=args.cond_tol)
    payload = {
        "parameters": {"source": args.source, "z_size": z_size,
                       "restarts": args.restarts, "cycles": args.cycles,
                       "seed": args.seed, "cond_tol": args.cond_tol},
        "feasible": bool(result.feasible),
        "bits": float(result.bits) if result.feasible else None,
        "conditional_mi": float(result.conditional_mi),
        "witness": _aux_payload(result.witness),
    }
    return payload, {}


def _run_blackwell_demo(args):
    trials = _check_trials(args.trials)
    _check_restarts(args.restarts)
    source = triangular_source()
    channel = blackwell_channel()
    code = blackwell_exact_code()
    closed = exact_code_error(code)

    # per-cell error probabilities are exact, so each Monte Carlo trial
    # collapses to a Bernoulli draw for the cell it lands in
    mass = source.joint.mass
    cells = [(s, t) for s in range(mass.shape[0])
             for t in range(mass.shape[1]) if mass[s, t] > 0]
    rows = channel.transition.rows
    cell_error = []
    for s, t in cells:
        x = code.encoder[(s, t)]
        ok = 0.0
        for y1 in range(rows.shape[1]):
            for y2 in range(rows.shape[2]):
                if rows[x, y1, y2] > 0 and code.decoder1[y1] == s \
                        and code.decoder2[y2] == t:
                    ok += rows[x, y1, y2]
        cell_error.append(max(0.0, 1.0 - ok))
    rng = np.random.default_rng(args.seed)
    counts = rng.multinomial(trials, np.array([mass[c] for c in cells]))
    errors = int(sum(int(rng.binomial(int(c), p))
                     for c, p in zip(counts, cell_error)))

    joint = source.joint
    h_left = float(entropy(joint, (0,)))
    h_pair = float(entropy(joint, (0, 1)))
    sep = separation_gap_check(source, z_size=args.z_size,
                               restarts=args.restarts, cycles=40,
                               seed=args.seed)

    corner = RateTuple5(0.0, h_left, h_left, h_pair - h_left,
                        h_pair - h_left)
    mem_det = membership(corner, RegionSpec("det_bc", channel=channel),
                         restarts=2, cycles=30, seed=0, tol=1e-9)
    mem_gw = membership(corner, RegionSpec("gw_inner", source=source,
                                           z_size=1),
                        restarts=2, cycles=30, seed=0, tol=1e-9)

    source_graph = from_joint_support(joint)
    size = channel.x_alphabet.size
    uniform_x = JointPmf((channel.x_alphabet,), np.full(size, 1.0 / size))
    output_pair = extend(uniform_x, channel.transition, (0,)).marginal((1, 2))
    channel_graph = from_joint_support(output_pair)
    iso = are_isomorphic(source_graph, channel_graph)

    payload = {
        "parameters": {"trials": trials, "seed": args.seed,
                       "restarts": args.restarts, "z_size": args.z_size},
        "exact_code": {
            "closed_form_error": float(closed),
            "monte_carlo_error": errors / trials,
            "errors": errors,
            "trials": trials,
            "edges": code.graph.edges().tolist(),
        },
        "entropies": {
            "h_left": h_left,
            "h_right": float(entropy(joint, (1,))),
            "h_pair": h_pair,
            "mutual": float(mutual_information(joint, (0,), (1,))),
        },
        "common_information": {
            "bits": float(sep.wyner.bits) if sep.wyner.feasible else None,
            "feasible": bool(sep.wyner.feasible),
            "conditional_mi": float(sep.wyner.conditional_mi),
            "z_size": args.z_size,
        },
        "separation": {
            "pair_entropy": float(sep.pair_entropy),
            "common_information": float(sep.common_information),
            "sum_rate_bound": float(sep.sum_rate_bound),
            "per_receiver_bound": float(sep.per_receiver_bound),
            "forces_rate_above_one": bool(sep.forces_rate_above_one),
        },
        "memberships": {
            "det_bc": {"status": mem_det.status, "member":
                       bool(mem_det.is_member),
                       "margin": float(mem_det.margin)},
            "gw_inner": {"status": mem_gw.status, "member":
                         bool(mem_gw.is_member),
                         "margin": float(mem_gw.margin)},
            "point": list(corner.as_tuple()),
        },
        "graphs": {
            "source_edges": source_graph.edges().tolist(),
            "channel_edges": channel_graph.edges().tolist(),
            "isomorphic": bool(iso.isomorphic),
            "left_perm": _perm_payload(iso.left_perm),
            "right_perm": _perm_payload(iso.right_perm),
        },
    }
    extras = {"figures": [("graphs", lambda p: figures.graph_pair_figure(
        p, source_graph, channel_graph,
        labels=("source pair support", "channel output support")))]}
    return payload, extras


def _completable_eps(source, layer, n, base_eps):
    """Slack near ``base_eps`` for which every typical shared sequence
    admits conditionally typical private sequences, or None.

    The shared draw only constrains per-symbol counts, so a draw is
    completable iff each symbol count fits between the summed per-cell
    bounds of the (shared, private) laws on both sides.  The scan walks
    multiplicative factors outward from 1 so the chosen slack stays close
    to the requested one.
    """
    joint = extend(source.joint, layer, (0, 1))
    z_axis = len(joint.axes) - 1
    factors = [1.0]
    for k in range(1, 61):
        factors.extend([1.02 ** k, 0.98 ** k])
    for factor in factors:
        params = TypicalityParams(base_eps * factor, n)
        lo_z, hi_z = count_bounds(joint.marginal((z_axis,)), params)
        lo_s, hi_s = count_bounds(joint.marginal((z_axis, 0)), params)
        lo_t, hi_t = count_bounds(joint.marginal((z_axis, 1)), params)
        spans = [range(lo_z[z], hi_z[z] + 1) for z in range(lo_z.size)]
        if np.prod([len(s) for s in spans]) > 200000:
            raise ResourceLimitError("sweep feasibility scan exceeds its "
                                     "budget; shrink --eps or the shared "
                                     "alphabet")
        total = 0
        good = True
        for counts in itertools.product(*spans):
            if sum(counts) != n:
                continue
            total += 1
            if not all(lo_s[z].sum() <= c <= hi_s[z].sum()
                       and lo_t[z].sum() <= c <= hi_t[z].sum()
                       for z, c in enumerate(counts)):
                good = False
                break
        if good and total > 0:
            return base_eps * factor
    return None


def _run_sweep(args):
    source = _resolve_source(args.source)
    if args.steps < 2:
        raise CliError("sweep needs at least two grid points")
    if args.steps > MAX_SWEEP_STEPS:
        raise ResourceLimitError(f"{args.steps} grid points exceed the cap "
                                 f"of {MAX_SWEEP_STEPS}")
    if args.n < 1:
        raise CliError("block length must be positive")
    if args.n > MAX_SWEEP_BLOCK_LENGTH:
        raise ResourceLimitError(f"block length {args.n} exceeds the sweep "
                                 f"cap of {MAX_SWEEP_BLOCK_LENGTH}")
    if args.pad <= 0:
        raise CliError("rate pad must be positive")
    revealing = revealing_common_layer(source)
    constant_rows = np.zeros_like(revealing.rows)
    constant_rows[..., 0] = 1.0
    grid = [k / (args.steps - 1) for k in range(args.steps)]
    plan = []
    for t in grid:
        mixed = (1.0 - t) * constant_rows + t * revealing.rows
        layer = ConditionalPmf(revealing.given_axes, revealing.output_axes,
                               mixed)
        eps = _completable_eps(source, layer, args.n, args.eps)
        if eps is None:
            raise CliError(
                f"no typicality slack near {args.eps} makes every shared "
                f"draw completable at grid point t={t:g}; pick steps and "
                f"block length so the layer cell probabilities times n stay "
                f"integral (for the default source: (steps-1) dividing n/3)")
        plan.append((t, layer, eps))
    table = []
    for t, layer, eps in plan:
        probe = GwCodeConfig(n=args.n, eps=eps, eps_prime=args.eps_prime,
                             r0=1.0, r1=1.0, r2=1.0, aux=layer,
                             seed=args.seed)
        facts = gw_rate_facts(source, probe)
        r0 = facts.i_pair_with_z + args.pad
        r1 = facts.h_s_given_z + args.pad
        r2 = facts.h_t_given_z + args.pad
        config = GwCodeConfig(n=args.n, eps=eps, eps_prime=args.eps_prime,
                              r0=r0, r1=r1, r2=r2, aux=layer,
                              seed=args.seed)
        codebook, diag = build_gw_code(source, config)
        table.append({
            "t": float(t),
            "eps": float(eps),
            "r0": float(r0), "r1": float(r1), "r2": float(r2),
            "r1p": float(diag.facts.r1p), "r2p": float(diag.facts.r2p),
            "realized_r0": float(diag.realized_r0),
            "realized_r1": float(diag.realized_r1),
            "realized_r2": float(diag.realized_r2),
            "edges": int(codebook.graph.edge_count),
            "blocks": int(codebook.block_count),
            "h_left_given_shared": float(facts.h_s_given_z),
            "h_right_given_shared": float(facts.h_t_given_z),
            "i_pair_with_shared": float(facts.i_pair_with_z),
            "i_pair_given_shared": float(facts.i_pair_given_z),
        })
    payload = {
        "parameters": {"source": args.source, "steps": args.steps,
                       "n": args.n, "eps": args.eps,
                       "eps_prime": args.eps_prime, "pad": args.pad,
                       "seed": args.seed},
        "rows": table,
    }
    fieldnames = ["t", "eps", "r0", "r1", "r2", "r1p", "r2p", "realized_r0",
                  "realized_r1", "realized_r2", "edges", "blocks",
                  "h_left_given_shared", "h_right_given_shared",
                  "i_pair_with_shared", "i_pair_given_shared"]
    series = {name: [row[name] for row in table]
              for name in ("r0", "r1", "r2", "r1p", "r2p")}
    edge_counts = [row["edges"] for row in table]
    extras = {
        "csv": (fieldnames, table),
        "figures": [("trajectory", lambda p:
                     figures.sweep_trajectory_figure(p, grid, series,
                                                     edge_counts))],
    }
    return payload, extras


# ---------------------------------------------------------------------------
# parser construction; the table below is the single source of truth for
# subcommand names, help text, and dispatch


def _add_out_flags(sub):
    sub.add_argument("--out", metavar="PATH",
                     help="write the JSON payload here; CSV and figure "
                          "files land next to it")
    sub.add_argument("--no-figures", action="store_true",
                     help="skip figure rendering")
    sub.add_argument("--config", metavar="FILE",
                     help="key-value config file; flags override it")


def _configure_info(sub):
    sub.add_argument("--source", metavar="SPEC",
                     help="'triangular' or a joint pmf file")
    sub.add_argument("--channel", metavar="SPEC",
                     help="'blackwell', 'identity:N', or a conditional "
                          "pmf file")
    sub.add_argument("--input", metavar="SPEC", default="uniform",
                     help="input law for channel reports: 'uniform' or a "
                          "one-axis joint pmf file (default uniform)")
    _add_out_flags(sub)


def _configure_graph(sub):
    sub.add_argument("op", choices=("validate", "isomorphic", "decompose"))
    sub.add_argument("paths", nargs="+", metavar="GRAPH",
                     help="graph file(s); block count comes from the header")
    sub.add_argument("--delta1", type=int, help="left vertices per block")
    sub.add_argument("--delta2", type=int, help="right vertices per block")
    sub.add_argument("--delta1p", type=float, help="nominal left degree")
    sub.add_argument("--delta2p", type=float, help="nominal right degree")
    sub.add_argument("--mu", type=float, help="degree slack factor >= 1")
    sub.add_argument("--budget", type=int, default=2000000,
                     help="isomorphism search budget (default 2000000)")
    _add_out_flags(sub)


def _configure_simulate_bc(sub):
    sub.add_argument("--channel", metavar="SPEC", default="blackwell")
    sub.add_argument("--aux", choices=("matched", "full-support"),
                     default="matched",
                     help="aux chain preset (default matched)")
    sub.add_argument("--aux-pz", metavar="FILE",
                     help="custom shared-layer pmf")
    sub.add_argument("--aux-puv", metavar="FILE",
                     help="custom pair layer p(u,v|z)")
    sub.add_argument("--aux-px", metavar="FILE",
                     help="custom input map p(x|z,u,v)")
    sub.add_argument("--n", required=True, metavar="N1,N2,...",
                     help="strictly increasing block lengths")
    sub.add_argument("--eps", type=float, required=True,
                     help="typicality slack")
    sub.add_argument("--eps-prime", type=float, default=1.0,
                     help="degree slack (default 1.0)")
    sub.add_argument("--r0", type=float, required=True)
    sub.add_argument("--r1", type=float, required=True)
    sub.add_argument("--r2", type=float, required=True)
    sub.add_argument("--decode-eps", type=float, default=None)
    sub.add_argument("--x-draw-eps", type=float, default=None)
    sub.add_argument("--no-enforce-region", action="store_true",
                     help="skip the rate admissibility checks")
    sub.add_argument("--seeds", required=True, metavar="A..B|a,b,c",
                     help="build seeds; one run per seed and block length")
    sub.add_argument("--trials", type=int, default=300,
                     help="Monte Carlo trials per run (default 300)")
    sub.add_argument("--threads", type=int, default=1,
                     help="trial-level worker threads (default 1)")
    _add_out_flags(sub)


def _configure_simulate_gw(sub):
    sub.add_argument("--source", metavar="SPEC", default="triangular")
    sub.add_argument("--aux", metavar="SPEC", default="constant",
                     help="'constant', 'revealing', or a conditional pmf "
                          "file p(z|s,t) (default constant)")
    sub.add_argument("--n", required=True, metavar="N1,N2,...",
                     help="strictly increasing block lengths")
    sub.add_argument("--eps", type=float, required=True,
                     help="typicality slack")
    sub.add_argument("--eps-prime", type=float, default=1.0,
                     help="degree slack (default 1.0)")
    sub.add_argument("--r0", type=float, required=True)
    sub.add_argument("--r1", type=float, required=True)
    sub.add_argument("--r2", type=float, required=True)
    sub.add_argument("--no-graph", action="store_true",
                     help="skip edge generation and degree diagnostics")
    sub.add_argument("--seeds", required=True, metavar="A..B|a,b,c")
    sub.add_argument("--trials", type=int, default=300)
    sub.add_argument("--threads", type=int, default=1)
    _add_out_flags(sub)


def _configure_region(sub):
    sub.add_argument("--kind", choices=KINDS, required=True)
    sub.add_argument("--channel", metavar="SPEC")
    sub.add_argument("--source", metavar="SPEC")
    sub.add_argument("--point", metavar="R0,R1,R2,R1P,R2P",
                     help="rate point to test")
    sub.add_argument("--z-size", type=int, default=None)
    sub.add_argument("--u-size", type=int, default=None)
    sub.add_argument("--v-size", type=int, default=None)
    sub.add_argument("--w-size", type=int, default=None)
    sub.add_argument("--aux-pz", metavar="FILE",
                     help="evaluate mode: shared-layer pmf")
    sub.add_argument("--aux-puv", metavar="FILE",
                     help="evaluate mode: pair layer p(u,v|z)")
    sub.add_argument("--aux-px", metavar="FILE",
                     help="evaluate mode: input map p(x|z,u,v)")
    sub.add_argument("--aux-joint", metavar="FILE",
                     help="evaluate mode (semi_det): joint pmf on (v, x)")
    sub.add_argument("--input", metavar="SPEC",
                     help="evaluate mode (det_bc): input law")
    sub.add_argument("--layer", metavar="SPEC",
                     help="evaluate mode (source kinds): 'constant', "
                          "'revealing', or a p(z|s,t) file")
    sub.add_argument("--tol", type=float, default=1e-3,
                     help="slack tolerance (default 1e-3; command line "
                          "points are usually rounded)")
    sub.add_argument("--restarts", type=int, default=40)
    sub.add_argument("--cycles", type=int, default=40)
    sub.add_argument("--seed", type=int, default=0,
                     help="search seed (default 0, deterministic)")
    _add_out_flags(sub)


def _configure_wyner(sub):
    sub.add_argument("--source", metavar="SPEC", default="triangular")
    sub.add_argument("--z-size", type=int, default=None,
                     help="shared alphabet size (default |S|*|T|)")
    sub.add_argument("--restarts", type=int, default=200)
    sub.add_argument("--cycles", type=int, default=40)
    sub.add_argument("--cond-tol", type=float, default=1e-6,
                     help="conditional-independence tolerance")
    sub.add_argument("--seed", type=int, default=0,
                     help="search seed (default 0, deterministic)")
    _add_out_flags(sub)


def _configure_blackwell_demo(sub):
    sub.add_argument("--trials", type=int, default=100000,
                     help="exact-code Monte Carlo trials (default 100000)")
    sub.add_argument("--restarts", type=int, default=60,
                     help="common-information restarts (default 60)")
    sub.add_argument("--z-size", type=int, default=3)
    sub.add_argument("--seed", type=int, default=0,
                     help="seed (default 0, deterministic)")
    _add_out_flags(sub)


def _configure_sweep(sub):
    sub.add_argument("--source", metavar="SPEC", default="triangular")
    sub.add_argument("--steps", type=int, default=3,
                     help="grid points from the constant to the revealing "
                          "layer (default 3)")
    sub.add_argument("--n", type=int, default=6,
                     help="block length for each build (default 6)")
    sub.add_argument("--eps", type=float, default=1.0)
    sub.add_argument("--eps-prime", type=float, default=2.0)
    sub.add_argument("--pad", type=float, default=0.15,
                     help="rate margin above each floor (default 0.15)")
    sub.add_argument("--seed", type=int, required=True,
                     help="build seed (required)")
    _add_out_flags(sub)


_SUBCOMMANDS = {
    "info": ("entropy and mutual information reports for sources and "
             "channels", _configure_info, _run_info),
    "graph": ("validate, compare, or decompose bipartite graph files",
              _configure_graph, _run_graph),
    "simulate-bc": ("build channel codes over a block-length ladder and "
                    "estimate error rates", _configure_simulate_bc,
                    _run_simulate_bc),
    "simulate-gw": ("build source codes over a block-length ladder and "
                    "estimate error rates", _configure_simulate_gw,
                    _run_simulate_gw),
    "region": ("evaluate rate constraints or search for a membership "
               "witness", _configure_region, _run_region),
    "wyner": ("minimize shared-description information over a fixed "
              "alphabet", _configure_wyner, _run_wyner),
    "blackwell-demo": ("run the full worked example: exact code, "
                       "common information, separation arithmetic, "
                       "memberships, graph match",
                       _configure_blackwell_demo, _run_blackwell_demo),
    "sweep": ("trace rates and edge counts while the shared layer moves "
              "from constant to revealing", _configure_sweep, _run_sweep),
}


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="graphbc",
        description="experiment runner for the graph-code toolbox",
        epilog="config files: one 'key value' per line, '#' comments, "
               "keys are long option names without dashes")
    subparsers = parser.add_subparsers(dest="subcommand", required=True,
                                       parser_class=_Parser)
    for name, (summary, configure, _) in _SUBCOMMANDS.items():
        sub = subparsers.add_parser(name, help=summary, description=summary)
        configure(sub)
    return parser


def _parse(argv: list):
    parser = _build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        merged = [argv[0]] + _config_argv(args.config) \
            + _strip_config(argv[1:])
        args = parser.parse_args(merged)
    return args


# ---------------------------------------------------------------------------
# emission


def _emit(args, payload, extras):
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    out = getattr(args, "out", None)
    if not out:
        sys.stdout.write(text)
        return
    out_path = Path(out)
    if str(out_path.parent) and not out_path.parent.is_dir():
        raise CliError(f"output directory {out_path.parent} does not exist")
    written = []
    out_path.write_text(text, encoding="utf-8")
    written.append(str(out_path))
    csv_spec = extras.get("csv")
    if csv_spec is not None:
        fieldnames, rows = csv_spec
        csv_path = out_path.with_suffix(".csv")
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=fieldnames,
                                    extrasaction="ignore")
            writer.writeheader()
            writer.writerows(rows)
        written.append(str(csv_path))
    if not getattr(args, "no_figures", False):
        for suffix, render in extras.get("figures", ()):
            figure_path = out_path.with_name(
                out_path.stem + "_" + suffix + ".png")
            render(str(figure_path))
            written.append(str(figure_path))
    for path in written:
        print(f"wrote {path}")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _parse(argv)
        _, _, runner = _SUBCOMMANDS[args.subcommand]
        body, extras = runner(args)
        payload = {"schema_version": SCHEMA_VERSION,
                   "command": args.subcommand}
        payload.update(body)
        _emit(args, payload, extras)
        return 0
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
