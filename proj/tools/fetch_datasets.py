#!/usr/bin/env python3
# Copyright 2026 The APFEx Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Fetch the public fairness benchmark tables and convert them to headered CSV.

Sources, tried in order:
  1. the UCI / ProPublica archives over HTTPS;
  2. the `responsibly` wheel on PyPI, which redistributes the raw UCI files
     (adult.data, adult.test, german.data) and the ProPublica COMPAS export.

Output files (in the cache directory):
  adult.csv, compas.csv, german.csv, and heart.csv when the UCI archive is
  reachable. Missing values are written as empty cells.

Usage: fetch_datasets.py [--cache DIR] [--only NAME ...] [--force] [--wheel PATH]
"""

import argparse
import csv
import io
import os
import subprocess
import sys
import tempfile
import urllib.request
import zipfile

UCI = "https://archive.ics.uci.edu/ml/machine-learning-databases"
URLS = {
    "adult.data": UCI + "/adult/adult.data",
    "adult.test": UCI + "/adult/adult.test",
    "german.data": UCI + "/statlog/german/german.data",
    "processed.cleveland.data": UCI + "/heart-disease/processed.cleveland.data",
    "compas-scores-two-years.csv":
        "https://raw.githubusercontent.com/propublica/compas-analysis/master/compas-scores-two-years.csv",
}
WHEEL = "responsibly==0.1.2"
WHEEL_MEMBERS = {
    "adult.data": "responsibly/dataset/adult/adult.data",
    "adult.test": "responsibly/dataset/adult/adult.test",
    "german.data": "responsibly/dataset/german/german.data",
    "compas-scores-two-years.csv": "responsibly/dataset/compas/compas-scores-two-years.csv",
}

ADULT_COLUMNS = ["age", "workclass", "fnlwgt", "education", "education_num",
                 "marital_status", "occupation", "relationship", "race", "sex",
                 "capital_gain", "capital_loss", "hours_per_week",
                 "native_country", "income"]
GERMAN_COLUMNS = ["status", "duration", "credit_history", "purpose",
                  "credit_amount", "savings", "present_employment",
                  "installment_rate", "status_sex", "other_debtors",
                  "present_residence_since", "property", "age",
                  "installment_plans", "housing", "number_of_existing_credits",
                  "job", "number_of_people_liable_for", "telephone",
                  "foreign_worker", "credit"]
HEART_COLUMNS = ["age", "sex", "cp", "trestbps", "chol", "fbs", "restecg",
                 "thalach", "exang", "oldpeak", "slope", "ca", "thal", "num"]
COMPAS_COLUMNS = ["sex", "age", "age_cat", "race", "juv_fel_count",
                  "juv_misd_count", "juv_other_count", "priors_count",
                  "c_charge_degree", "two_year_recid"]


class Sources:
    def __init__(self, workdir, wheel=None):
        self.workdir = workdir
        self.wheel = wheel

    def _from_url(self, name):
        try:
            with urllib.request.urlopen(URLS[name], timeout=15) as resp:
                return resp.read().decode("utf-8", errors="replace")
        except Exception as exc:  # network failures of any kind
            print(f"  {name}: direct download failed ({exc.__class__.__name__})",
                  file=sys.stderr)
            return None

    def _from_wheel(self, name):
        if name not in WHEEL_MEMBERS:
            return None
        if self.wheel is None:
            cmd = [sys.executable, "-m", "pip", "download", "--no-deps",
                   "--quiet", "-d", self.workdir, WHEEL]
            done = subprocess.run(cmd, stdout=subprocess.DEVNULL,
                                  stderr=subprocess.DEVNULL)
            if done.returncode != 0:
                print(f"  pip download of {WHEEL} failed", file=sys.stderr)
                self.wheel = ""
                return None
            found = [f for f in os.listdir(self.workdir) if f.endswith(".whl")]
            self.wheel = os.path.join(self.workdir, found[0]) if found else ""
        if not self.wheel:
            return None
        with zipfile.ZipFile(self.wheel) as zf:
            return zf.read(WHEEL_MEMBERS[name]).decode("utf-8", errors="replace")

    def get(self, name):
        text = self._from_url(name)
        if text is None:
            text = self._from_wheel(name)
        if text is None:
            raise RuntimeError(f"no source available for {name}")
        return text


def write_csv(path, header, rows):
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    os.replace(tmp, path)
    print(f"  wrote {path} ({len(rows)} rows)")


def convert_adult(src, out):
    rows = []
    for name in ("adult.data", "adult.test"):
        for line in src.get(name).splitlines():
            line = line.strip()
            if not line or line.startswith("|"):
                continue
            cells = [c.strip() for c in line.split(",")]
            if len(cells) != len(ADULT_COLUMNS):
                continue
            cells[-1] = cells[-1].rstrip(".")
            rows.append(["" if c == "?" else c for c in cells])
    write_csv(out, ADULT_COLUMNS, rows)


def convert_german(src, out):
    rows = [line.split() for line in src.get("german.data").splitlines() if line.strip()]
    write_csv(out, GERMAN_COLUMNS, rows)


def convert_heart(src, out):
    rows = []
    for line in src.get("processed.cleveland.data").splitlines():
        if not line.strip():
            continue
        cells = ["" if c.strip() == "?" else c.strip() for c in line.split(",")]
        rows.append(cells)
    write_csv(out, HEART_COLUMNS, rows)


def convert_compas(src, out):
    reader = csv.DictReader(io.StringIO(src.get("compas-scores-two-years.csv")))
    rows = []
    for r in reader:
        # ProPublica's screening filter.
        try:
            days = int(r["days_b_screening_arrest"])
        except ValueError:
            continue
        if not -30 <= days <= 30 or r["is_recid"] == "-1":
            continue
        if r["c_charge_degree"] == "O" or r["score_text"] == "N/A":
            continue
        rows.append([r[c] for c in COMPAS_COLUMNS])
    write_csv(out, COMPAS_COLUMNS, rows)


CONVERTERS = {
    "adult": convert_adult,
    "german": convert_german,
    "compas": convert_compas,
    "heart": convert_heart,
}


def main():
    default_cache = os.environ.get("APFEX_DATA_DIR",
                                   os.path.join(os.path.expanduser("~"), ".cache", "apfex"))
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cache", default=default_cache)
    ap.add_argument("--only", nargs="*", choices=sorted(CONVERTERS))
    ap.add_argument("--force", action="store_true")
    ap.add_argument("--wheel", help="use an already downloaded responsibly wheel")
    args = ap.parse_args()

    os.makedirs(args.cache, exist_ok=True)
    failed = []
    with tempfile.TemporaryDirectory() as work:
        src = Sources(work, args.wheel)
        for name in args.only or sorted(CONVERTERS):
            out = os.path.join(args.cache, name + ".csv")
            if os.path.exists(out) and not args.force:
                print(f"  {out} already cached")
                continue
            print(f"fetching {name}")
            try:
                CONVERTERS[name](src, out)
            except Exception as exc:
                print(f"  {name}: {exc}", file=sys.stderr)
                failed.append(name)
    if failed:
        print("unavailable: " + ", ".join(failed), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
