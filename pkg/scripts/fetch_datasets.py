"""Download Facebook and PPI into the layout the dataset-gated tests expect.

    data/facebook.edgelist   SNAP ego-Facebook combined graph
    data/ppi.edgelist        Homo sapiens PPI graph (node2vec release)
    data/ppi.labels          one "node label..." line per labelled node

Needs network access and, for PPI, scipy (``pip install 'artifact[data]'``). The sha256 of
every downloaded archive is printed and written to ``data/SHA256SUMS`` so later runs can be
checked against the same bytes.
"""

from __future__ import annotations

import argparse
import gzip
import hashlib
import shutil
import sys
import urllib.request
from pathlib import Path

FACEBOOK_URL = "https://snap.stanford.edu/data/facebook_combined.txt.gz"
PPI_URL = "https://snap.stanford.edu/node2vec/Homo_sapiens.mat"


def download(url: str, dest: Path) -> str:
    print(f"fetching {url}", file=sys.stderr)
    with urllib.request.urlopen(url, timeout=120) as resp, open(dest, "wb") as fh:
        shutil.copyfileobj(resp, fh)
    return hashlib.sha256(dest.read_bytes()).hexdigest()


def fetch_facebook(out: Path) -> str:
    archive = out / "facebook_combined.txt.gz"
    digest = download(FACEBOOK_URL, archive)
    with gzip.open(archive, "rt") as src, open(out / "facebook.edgelist", "w") as dst:
        shutil.copyfileobj(src, dst)
    return digest


def fetch_ppi(out: Path) -> str:
    from scipy.io import loadmat

    archive = out / "Homo_sapiens.mat"
    digest = download(PPI_URL, archive)
    mat = loadmat(archive)
    adj = mat["network"].tocoo()
    with open(out / "ppi.edgelist", "w") as fh:
        for u, v in zip(adj.row, adj.col):
            if u < v:
                fh.write(f"{u} {v}\n")
    groups = mat["group"].tocsr()
    with open(out / "ppi.labels", "w") as fh:
        for node in range(groups.shape[0]):
            labels = groups[node].indices
            if len(labels):
                fh.write(f"{node} " + " ".join(str(int(x)) for x in sorted(labels)) + "\n")
    return digest


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--out", type=Path, default=Path("data"))
    parser.add_argument("--only", choices=("facebook", "ppi"))
    args = parser.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)
    sums = []
    if args.only in (None, "facebook"):
        sums.append((fetch_facebook(args.out), "facebook_combined.txt.gz"))
    if args.only in (None, "ppi"):
        sums.append((fetch_ppi(args.out), "Homo_sapiens.mat"))
    with open(args.out / "SHA256SUMS", "a") as fh:
        for digest, name in sums:
            print(f"{digest}  {name}")
            fh.write(f"{digest}  {name}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
