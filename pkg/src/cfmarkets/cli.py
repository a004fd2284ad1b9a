"""Command-line surface: run scenario protocols and static checks.

Exit codes: 0 all enabled checks pass, 1 a check failed, 2 the scenario
could not be parsed. Output records are line-delimited with the fixed field
set {ts, kind, state, price_center, spread, cost_delta, trader, check,
value, pass}; identical scenario and seed produce byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from .gradual import model_at
from .lcmm import LcmmCost, tightness_check
from .scenario import Scenario, ScenarioError, load_scenario
from .simulate import (InconsistentPlanError, run_protocol1, run_protocol2,
                       verify_loss, wc_loss_bound)
from .switching import check_desiderata, consistency_check, \
    feasibility_precheck

RECORD_FIELDS = ("ts", "kind", "state", "price_center", "spread",
                 "cost_delta", "trader", "check", "value", "pass")


def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer, int)):
        return int(v)
    return v


def _record(**kw) -> dict:
    rec = {k: None for k in RECORD_FIELDS}
    for k, v in kw.items():
        if isinstance(v, np.ndarray):
            v = [float(x) for x in v]
        rec[k] = _num(v)
    return rec


def _write_records(records, out, fmt: str):
    if fmt == "jsonl":
        for rec in records:
            out.write(json.dumps(rec, sort_keys=True) + "\n")
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(RECORD_FIELDS)
    for rec in records:
        row = []
        for k in RECORD_FIELDS:
            v = rec[k]
            row.append(json.dumps(v) if isinstance(v, list) else v)
        writer.writerow(row)


def _trade_records(ledger, price_model_at):
    for rec in ledger.records:
        model = price_model_at(rec.time)
        p = model.price(rec.state_after)
        yield _record(ts=rec.time, kind="trade", state=rec.state_after,
                      price_center=p.center, spread=p.spread,
                      cost_delta=rec.cost, trader=rec.trader)


def _run_sudden(sc: Scenario, allow_inconsistent: bool):
    records = []
    failures = []
    try:
        ledger = run_protocol1(sc.model, sc.initial_state, sc.observation,
                               sc.traders, sc.switch_time, sc.settlement,
                               seed=sc.seed,
                               allow_inconsistent=allow_inconsistent,
                               switch_boundary=sc.switch_boundary)
    except InconsistentPlanError as e:
        v = e.plan.consistency
        records.append(_record(ts=sc.switch_time, kind="switch",
                               check="consistency",
                               value=v.worst_violation, **{"pass": False}))
        return records, ["inconsistent switch plan (use --allow-inconsistent "
                         "to trade through it); worst violation "
                         f"{v.worst_violation:.6g} at "
                         f"mu={[round(float(x), 6) for x in v.witness['mu']]}"]

    def model_for(t):
        if ledger.plan is not None and (
                t >= sc.switch_time if sc.switch_boundary == "after"
                else t > sc.switch_time):
            return ledger.plan.switched
        return sc.model

    records.extend(_trade_records(ledger, model_for))
    plan = ledger.plan
    if plan is not None:
        consistent = plan.consistency.consistent
        records.append(_record(ts=sc.switch_time, kind="switch",
                               state=plan.switch_state, check="consistency",
                               value=plan.consistency.worst_violation,
                               **{"pass": consistent}))
        report = check_desiderata((sc.model, plan.switch_state),
                                  (plan.switched, plan.switch_state),
                                  sc.observation, tol=sc.tol, seed=sc.seed,
                                  price_informational=True)
        for name, row in report.rows.items():
            enabled = not row.informational and (
                consistent or name not in ("EXUTIL", "CONDPRICE", "DECUTIL"))
            records.append(_record(ts=sc.switch_time, kind="check",
                                   check=name, value=row.worst,
                                   **{"pass": row.passed}))
            if enabled and not row.passed:
                failures.append(f"desideratum {name} failed "
                                f"(worst deviation {row.worst:.3g})")
    bound = wc_loss_bound(sc.model, sc.initial_state)
    ok, slack = verify_loss(ledger, bound, tol=sc.tol)
    records.append(_record(ts=None, kind="check", check="loss_bound",
                           value=slack, **{"pass": ok}))
    if not ok:
        failures.append(f"maker loss exceeded the worst-case bound by {-slack:.3g}")
    records.append(_record(ts=None, kind="settlement",
                           state=ledger.final_state, value=ledger.maker_loss,
                           **{"pass": ok}))
    return records, failures


def _run_gradual(sc: Scenario):
    records = []
    failures = []
    ledger = run_protocol2(sc.model, sc.schedule, sc.initial_state, sc.t0,
                           sc.requests, sc.settlement, seed=sc.seed)
    records.extend(_trade_records(
        ledger, lambda t: model_at(sc.model, sc.schedule, t)))
    bound = wc_loss_bound(model_at(sc.model, sc.schedule, sc.t0),
                          sc.initial_state)
    ok, slack = verify_loss(ledger, bound, tol=sc.tol)
    records.append(_record(ts=None, kind="check", check="loss_bound",
                           value=slack, **{"pass": ok}))
    if not ok:
        failures.append(f"maker loss exceeded the worst-case bound by {-slack:.3g}")
    records.append(_record(ts=None, kind="settlement",
                           state=ledger.final_state, value=ledger.maker_loss,
                           **{"pass": ok}))
    return records, failures


def cmd_run(path, out=None, seed=None, tol=None,
            allow_inconsistent: bool = False, fmt: str = "jsonl") -> int:
    try:
        sc = load_scenario(path)
        if seed is not None:
            sc.seed = int(seed)
        if tol is not None:
            sc.tol = float(tol)
    except ScenarioError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    if sc.protocol == "sudden":
        records, failures = _run_sudden(sc, allow_inconsistent)
    else:
        records, failures = _run_gradual(sc)
    if out is None:
        _write_records(records, sys.stdout, fmt)
    else:
        buf = io.StringIO()
        _write_records(records, buf, fmt)
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    for msg in failures:
        print(f"FAIL: {msg}", file=sys.stderr)
    return 1 if failures else 0


def cmd_check(path, tol=None, allow_inconsistent: bool = False) -> int:
    try:
        sc = load_scenario(path)
        if tol is not None:
            sc.tol = float(tol)
    except ScenarioError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    ok = True
    print(f"scenario: {sc.name}")
    if sc.protocol == "sudden":
        fr = feasibility_precheck(sc.model.space, sc.observation)
        print(f"feasibility: {fr.status}")
        for x in sc.observation.realizations:
            w = fr.witnesses[x]
            tag = ("exposed, witness "
                   f"{[round(float(v), 3) for v in w.vector]}"
                   if w is not None else "no exposure witness")
            print(f"  cell {x!r}: {tag}")
        verdict = consistency_check(sc.model, sc.observation,
                                    sc.initial_state, tol=max(sc.tol, 1e-9))
        print(f"consistency at initial state: "
              f"{'consistent' if verdict.consistent else 'INCONSISTENT'} "
              f"(worst violation {verdict.worst_violation:.6g})")
        if not verdict.consistent:
            if verdict.witness and "mu" in verdict.witness:
                mu = [round(float(v), 6) for v in verdict.witness["mu"]]
                print(f"  witness: mu={mu} for realization "
                      f"{verdict.witness['realization']!r}")
            ok = allow_inconsistent
        bound = wc_loss_bound(sc.model, sc.initial_state)
    else:
        for g in range(len(sc.model.blocks.blocks)):
            res = tightness_check(sc.model, g)
            print(f"block {g} {sc.model.blocks.blocks[g]}: {res.status}")
            if res.status == "not_tight":
                ok = False
        bound = wc_loss_bound(model_at(sc.model, sc.schedule, sc.t0),
                              sc.initial_state)
    print(f"worst-case loss bound: {bound:.9f}")
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cfmarkets",
        description="cost-function market maker scenarios")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="execute a scenario protocol")
    run_p.add_argument("scenario")
    run_p.add_argument("--out", default=None)
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--tol", type=float, default=None)
    run_p.add_argument("--allow-inconsistent", action="store_true")
    run_p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    check_p = sub.add_parser("check", help="static feasibility/loss report")
    check_p.add_argument("scenario")
    check_p.add_argument("--tol", type=float, default=None)
    check_p.add_argument("--allow-inconsistent", action="store_true")
    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args.scenario, out=args.out, seed=args.seed,
                       tol=args.tol,
                       allow_inconsistent=args.allow_inconsistent,
                       fmt=args.format)
    return cmd_check(args.scenario, tol=args.tol,
                     allow_inconsistent=args.allow_inconsistent)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
