#!/usr/bin/env python3
"""Runs `yulverify verify --json` over the fixture corpus and validates each report."""
import json
import subprocess
import sys
from pathlib import Path

import jsonschema

KINDS = ("verified", "refuted", "unknown", "timeout", "solver_error", "deferred")


def options(path):
    opts = ["--ecf", "transferFrom=pure"]
    if path.name.startswith("array_alloc"):
        opts += ["--wrap-bits", "64"]
    return opts


def check_totals(report):
    errors = []
    totals = report["totals"]
    for key, t in totals.items():
        if t["total"] != sum(t[k] for k in KINDS):
            errors.append(f"{key}: total {t['total']} != sum of statuses")
    for field in ("total",) + KINDS:
        by_type = sum(totals[f"T{i}"][field] for i in range(1, 7))
        if by_type != totals["all"][field]:
            errors.append(f"{field}: T1..T6 sum {by_type} != all {totals['all'][field]}")
    listed = [o for f in report["functions"] for o in f["obligations"]]
    if len(listed) != totals["all"]["total"]:
        errors.append(f"{len(listed)} obligations listed, totals say {totals['all']['total']}")
    for t in range(1, 7):
        n = sum(1 for o in listed if o["property_type"] == f"T{t}")
        if n != totals[f"T{t}"]["total"]:
            errors.append(f"T{t}: {n} listed, totals say {totals[f'T{t}']['total']}")
    if len(report["deferred"]) != totals["all"]["deferred"]:
        errors.append("deferred manifest size differs from deferred total")
    findings = sum(len(f["findings"]) for f in report["functions"])
    if findings != report["findings"]:
        errors.append("finding count differs from listed findings")
    undischarged = totals["all"]["total"] - totals["all"]["deferred"] - totals["all"]["verified"]
    expected_exit = 1 if undischarged or findings else 0
    if report["exit_code"] != expected_exit:
        errors.append(f"exit_code {report['exit_code']} but expected {expected_exit}")
    return errors


def corrupted(report):
    """Copies of a valid report that the schema or the totals check must reject."""
    bad_status = json.loads(json.dumps(report))
    for f in bad_status["functions"]:
        for o in f["obligations"]:
            o["status"] = "proved"
    missing = {k: v for k, v in report.items() if k != "totals"}
    off_by_one = json.loads(json.dumps(report))
    off_by_one["totals"]["all"]["total"] += 1
    return [bad_status, missing, off_by_one]


def main():
    exe, schema_path, fixtures = sys.argv[1], Path(sys.argv[2]), Path(sys.argv[3])
    schema = json.loads(schema_path.read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)
    files = sorted(fixtures.glob("*.yul")) + sorted((fixtures / "straight").glob("*.yul"))
    failures = 0
    sample = None
    for path in files:
        proc = subprocess.run([exe, "verify", str(path), "--json", "-"] + options(path),
                              capture_output=True, text=True, timeout=120)
        try:
            report = json.loads(proc.stdout)
        except json.JSONDecodeError as e:
            print(f"FAIL {path.name}: no JSON on stdout ({e}); stderr: {proc.stderr.strip()}")
            failures += 1
            continue
        errors = [f"{'/'.join(map(str, e.path))}: {e.message}" for e in validator.iter_errors(report)]
        errors += check_totals(report)
        if proc.returncode != report["exit_code"]:
            errors.append(f"process exit {proc.returncode} != report exit_code {report['exit_code']}")
        if errors:
            failures += 1
            print(f"FAIL {path.name}")
            for e in errors:
                print(f"  {e}")
        else:
            print(f"ok   {path.name}")
            if sample is None and report["functions"] and report["functions"][0]["obligations"]:
                sample = report
    if sample is None:
        print("FAIL no non-empty report to corrupt")
        failures += 1
    else:
        for i, bad in enumerate(corrupted(sample)):
            rejected = any(True for _ in validator.iter_errors(bad)) or ("totals" in bad and check_totals(bad))
            if not rejected:
                print(f"FAIL corrupted report {i} accepted")
                failures += 1
    print(f"{len(files) - failures}/{len(files)} reports valid")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
