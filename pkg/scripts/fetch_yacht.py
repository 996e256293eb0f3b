#!/usr/bin/env python3
"""Download the UCI yacht hydrodynamics table and convert it to the CSV
layout the benchmarks expect (six feature columns, target column 'y').

Needs outbound network access; writes data/yacht_hydrodynamics.csv.
"""

import io
import os
import sys
import urllib.request

URLS = [
    "https://archive.ics.uci.edu/ml/machine-learning-databases/00243/"
    "yacht_hydrodynamics.data",
    "https://raw.githubusercontent.com/selva86/datasets/master/"
    "yacht_hydrodynamics.data",
]

COLUMNS = ["buoyancy_position", "prismatic_coeff", "length_disp_ratio",
           "beam_draught_ratio", "length_beam_ratio", "froude_number", "y"]


def fetch() -> str:
    last = None
    for url in URLS:
        try:
            with urllib.request.urlopen(url, timeout=30) as resp:
                return resp.read().decode("utf-8")
        except Exception as exc:  # noqa: BLE001 - report the last failure
            last = exc
    raise SystemExit(f"could not download the dataset: {last}")


def main() -> None:
    out_path = sys.argv[1] if len(sys.argv) > 1 else \
        "data/yacht_hydrodynamics.csv"
    raw = fetch()
    rows = []
    for line in io.StringIO(raw):
        cells = line.split()
        if not cells:
            continue
        if len(cells) != 7:
            raise SystemExit(f"unexpected row width {len(cells)}: {line!r}")
        rows.append(cells)
    if len(rows) != 308:
        raise SystemExit(f"expected 308 rows, got {len(rows)}")
    os.makedirs(os.path.dirname(out_path) or ".", exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(",".join(COLUMNS) + "\n")
        for cells in rows:
            fh.write(",".join(cells) + "\n")
    print(f"wrote {len(rows)} rows to {out_path}")


if __name__ == "__main__":
    main()
