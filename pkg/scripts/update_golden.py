"""Regenerate the golden CLI reports under tests/golden/.

Run after a deliberate change to a report layout or an algorithm, then review
the diff before committing.
"""

import argparse
import contextlib
import io
import pathlib

from vepcone.cli import run

ROOT = pathlib.Path(__file__).resolve().parents[1]
RUNS = {
    "ex31-inner-cone": ["example", "ex31", "inner-cone"],
    "ex31-outer-cone": ["example", "ex31", "outer-cone"],
    "ex32-residual": ["example", "ex32", "residual", "--at", "1.5"],
    "ex32-error-bound": ["example", "ex32", "error-bound"],
    "ex31-l1-soc": ["example", "ex31-l1", "soc"],
    "ex31-lin-neg-noc": ["example", "ex31-lin-neg", "noc"],
}


def render(argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = run(argv + ["--json", "-"])
    return code, buf.getvalue()


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(ROOT / "tests" / "golden"))
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, argv in RUNS.items():
        code, text = render(argv)
        (out / f"{name}.json").write_text(text)
        print(f"{name}: exit {code}")


if __name__ == "__main__":
    main()
