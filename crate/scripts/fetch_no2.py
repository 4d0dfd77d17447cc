#!/usr/bin/env python3
"""Fetch the low-cost NO2 sensor dataset and write data/no2.csv.

The output keeps two columns: SUD3 (reference analyser) and ASE10 (low-cost
sensor). Without network access, download the dataset by hand from
https://data.mendeley.com/datasets/82dnstrd93/1 and pass the file with --file.
"""

import argparse
import io
import re
import sys
import zipfile
from pathlib import Path

import pandas as pd
import requests

DATASET = "82dnstrd93"
VERSION = 1
API = "https://data.mendeley.com/public-api/datasets/{id}/files?folder_id=root&version={v}"
COLUMNS = ("SUD3", "ASE10")


def tables_from_bytes(name, blob):
    lower = name.lower()
    if lower.endswith(".zip"):
        with zipfile.ZipFile(io.BytesIO(blob)) as z:
            for inner in z.namelist():
                yield from tables_from_bytes(inner, z.read(inner))
    elif lower.endswith((".xlsx", ".xls")):
        for sheet in pd.read_excel(io.BytesIO(blob), sheet_name=None).values():
            yield sheet
    elif lower.endswith((".csv", ".txt")):
        yield pd.read_csv(io.BytesIO(blob), sep=None, engine="python")


def pick_columns(frame):
    found = {}
    for want in COLUMNS:
        for col in frame.columns:
            if re.fullmatch(rf"\s*{want}\b.*", str(col), flags=re.IGNORECASE):
                found[want] = col
                break
    if len(found) < len(COLUMNS):
        return None
    return frame[[found[c] for c in COLUMNS]].set_axis(list(COLUMNS), axis=1)


def download():
    listing = requests.get(API.format(id=DATASET, v=VERSION), timeout=60)
    listing.raise_for_status()
    for entry in listing.json():
        url = entry.get("content_details", {}).get("download_url")
        if url:
            r = requests.get(url, timeout=300)
            r.raise_for_status()
            yield entry.get("filename", url), r.content


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--file", type=Path, help="already downloaded dataset file (csv, xlsx or zip)")
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data" / "no2.csv")
    args = ap.parse_args()

    sources = [(args.file.name, args.file.read_bytes())] if args.file else download()
    for name, blob in sources:
        for table in tables_from_bytes(name, blob):
            picked = pick_columns(table)
            if picked is not None:
                args.out.parent.mkdir(parents=True, exist_ok=True)
                picked.to_csv(args.out, index=False, na_rep="NA")
                print(f"wrote {len(picked)} rows from {name} to {args.out}")
                return 0
    print(f"no table with columns {', '.join(COLUMNS)} found", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
