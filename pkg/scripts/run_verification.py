#!/usr/bin/env python3
"""Run all four verification suites and write their JSON reports to out/."""

import pathlib
import subprocess
import sys

HERE = pathlib.Path(__file__).resolve().parent
OUT = HERE / "out"
PROBLEMS = HERE / "problems"


def run(args, dest):
    dest.parent.mkdir(parents=True, exist_ok=True)
    cmd = [sys.executable, "-m", "movingbeliefs.cli", "verify", *args, "--out", str(dest)]
    print("+", " ".join(cmd))
    res = subprocess.run(cmd)
    print(f"  -> exit {res.returncode}")
    return res.returncode


def main() -> int:
    worst = 0
    worst |= run(["body", "--seed", "7"], OUT / "body.json")
    worst |= run(["tv-bound", str(PROBLEMS / "eps_toy.json")], OUT / "tv_bound.json")
    worst |= run(["sandwich", "--builtin", "qmap"], OUT / "sandwich.json")
    worst |= run(["w1", str(PROBLEMS / "w1_toy.json")], OUT / "w1.json")
    return worst


if __name__ == "__main__":
    raise SystemExit(main())
