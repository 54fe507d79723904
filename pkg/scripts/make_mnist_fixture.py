"""Write the 5000-sample MNIST excerpt bundled with mlxtend as IDX files.

    python scripts/make_mnist_fixture.py [--wheel mlxtend-*.whl] [--out tests/data]

Without ``--wheel`` the installed ``mlxtend`` package is used.  Produces
``mnist5k-images-idx3-ubyte.gz`` and ``mnist5k-labels-idx1-ubyte.gz``.
"""

import argparse
import gzip
import io
import zipfile
from pathlib import Path

import numpy as np

from bcsc.data import write_idx

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def read_csv_gz(args):
    if args.wheel:
        with zipfile.ZipFile(args.wheel) as z:
            return z.read(MEMBER)
    import mlxtend.data

    return (Path(mlxtend.data.__file__).parent / "data" / "mnist_5k.csv.gz").read_bytes()


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--wheel")
    ap.add_argument("--out", default="tests/data")
    args = ap.parse_args()
    table = np.loadtxt(io.BytesIO(gzip.decompress(read_csv_gz(args))), delimiter=",", dtype=np.int64)
    images, labels = table[:, :-1], table[:, -1]
    assert images.shape[1] == 784 and images.min() >= 0 and images.max() <= 255
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_idx(out / "mnist5k-images-idx3-ubyte.gz", images.reshape(-1, 28, 28).astype(np.uint8))
    write_idx(out / "mnist5k-labels-idx1-ubyte.gz", labels.astype(np.uint8))
    print(f"wrote {len(labels)} samples to {out}, class counts {np.bincount(labels).tolist()}")


if __name__ == "__main__":
    main()
