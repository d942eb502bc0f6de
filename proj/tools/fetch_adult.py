#!/usr/bin/env python3
"""Download the UCI census income data and write one combined CSV.

The upstream distribution splits the data into adult.data and adult.test,
ships no header row, prefixes the test file with a banner line, and suffixes
test labels with a period. This script undoes all of that and writes a single
file that loads with configs/adult.schema.
"""

import argparse
import csv
import io
import os
import sys
import urllib.request

BASE = "https://archive.ics.uci.edu/ml/machine-learning-databases/adult"

COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education_num",
    "marital_status", "occupation", "relationship", "race", "sex",
    "capital_gain", "capital_loss", "hours_per_week", "native_country",
    "income",
]


def read_source(url, local):
    if local:
        with open(local, encoding="utf-8") as f:
            return f.read()
    print(f"fetching {url}", file=sys.stderr)
    with urllib.request.urlopen(url, timeout=60) as resp:
        return resp.read().decode("utf-8")


def parse_rows(text):
    rows = []
    for record in csv.reader(io.StringIO(text)):
        if not record or not "".join(record).strip():
            continue
        if record[0].lstrip().startswith("|"):  # test-file banner
            continue
        cells = [c.strip() for c in record]
        if len(cells) != len(COLUMNS):
            raise SystemExit(
                f"unexpected record width {len(cells)}: {','.join(cells)}")
        cells[-1] = cells[-1].rstrip(".")  # test labels read ">50K."
        rows.append(cells)
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="data/adult.csv", help="combined CSV destination")
    ap.add_argument("--train-file", help="local copy of adult.data, skips the download")
    ap.add_argument("--test-file", help="local copy of adult.test, skips the download")
    args = ap.parse_args()

    rows = parse_rows(read_source(f"{BASE}/adult.data", args.train_file))
    rows += parse_rows(read_source(f"{BASE}/adult.test", args.test_file))
    if len(rows) != 48842:
        print(f"warning: expected 48842 rows, got {len(rows)}", file=sys.stderr)

    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    with open(args.out, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(COLUMNS)
        writer.writerows(rows)
    print(f"wrote {args.out}: {len(rows)} rows")


if __name__ == "__main__":
    main()
