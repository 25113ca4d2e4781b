"""Runs every subcommand once and validates its JSON against the report schema."""

import json
import subprocess
import sys

import jsonschema


def main() -> int:
    regmod, schema_path, fixtures = sys.argv[1:4]
    with open(schema_path, encoding="utf-8") as fh:
        schema = json.load(fh)
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)

    ex1 = f"{fixtures}/sys_ex1.prob"
    commands = [
        ["fixtures"],
        ["validate", "--problem", f"{fixtures}/blpp1.prob"],
        ["project", "--problem", ex1, "--p", "0.1", "--v", "0.1,-1"],
        ["project", "--problem", f"{fixtures}/blpp1.prob", "--p", "-2", "--v", "0"],
        ["rcrcq", "--problem", f"{fixtures}/sys_rankdrop.prob", "--p0", "0", "--x0", "0,0"],
        ["rreg", "--problem", ex1, "--p0", "0", "--x0", "0,-1", "--steps", "4", "--multipliers"],
        ["aubin", "--problem", ex1, "--p0", "0", "--x0", "0,-1", "--steps", "3", "--samples", "4"],
        ["lolip", "--problem", f"{fixtures}/sys_ball.prob", "--p0", "0", "--x0", "1,0", "--steps", "3"],
        ["lsc", "--problem", ex1, "--p0", "0", "--x0", "0,-1"],
        ["cones", "--problem", f"{fixtures}/sys_ball.prob", "--p0", "0", "--x0", "1,0", "--directions", "8"],
        ["value", "--problem", f"{fixtures}/blpp1.prob", "--p", "0.4"],
        ["value", "--problem", f"{fixtures}/blpp1.prob", "--p", "-2"],
        ["phi-lip", "--problem", f"{fixtures}/blpp_box.prob", "--p0", "0"],
        ["penalty", "--problem", f"{fixtures}/blpp1.prob", "--pstar", "0.25", "--xstar", "0.25", "--samples", "200"],
    ]
    failures = 0
    for cmd in commands:
        proc = subprocess.run([regmod, *cmd], capture_output=True, text=True, check=False)
        label = " ".join(cmd[:1] + cmd[3:])
        if proc.returncode != 0:
            print(f"FAIL {label}: exit {proc.returncode}: {proc.stderr.strip()}")
            failures += 1
            continue
        errors = sorted(validator.iter_errors(json.loads(proc.stdout)), key=lambda e: list(e.path))
        if errors:
            failures += 1
            for err in errors[:5]:
                print(f"FAIL {label}: {'/'.join(map(str, err.path))}: {err.message}")
        else:
            print(f"ok   {label}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
