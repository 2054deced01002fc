"""Text formats for monomial/image corpora.

BOOL v1: header ``BOOL v1 n=<n>``, then one monomial per line as
comma-separated 1-based variable indices in increasing order; a blank line is
the empty monomial and ``#`` starts a comment line.

IMG v1: header ``IMG v1 w=<w> h=<h>``, then one image per block of h lines of
w characters from {0,1}, blocks separated by blank lines; bit i in row-major
order is variable i+1.
"""
from __future__ import annotations

from .booleans import Monomial, TargetSet


def monomials_to_text(monomials, n: int) -> str:
    lines = [f"BOOL v1 n={n}"]
    for m in monomials:
        lines.append(",".join(str(v) for v in m.vars))
    return "\n".join(lines) + "\n"


def write_monomials(monomials, n: int, path):
    with open(path, "w") as fh:
        fh.write(monomials_to_text(monomials, n))


def monomials_from_text(text: str) -> tuple[list[Monomial], int]:
    lines = text.splitlines()
    header = None
    body: list[str] = []
    for ln in lines:
        if ln.lstrip().startswith("#"):
            continue
        if header is None:
            if not ln.strip():
                continue
            header = ln.split()
            continue
        body.append(ln)
    if not header or header[:2] != ["BOOL", "v1"]:
        raise ValueError("not a BOOL v1 file")
    n = int(dict(kv.split("=") for kv in header[2:])["n"])
    out = []
    for ln in body:
        vals = [int(v) for v in ln.split(",") if v.strip()] if ln.strip() else []
        out.append(Monomial.from_vars(vals, n))
    return out, n


def read_monomials(path) -> tuple[list[Monomial], int]:
    with open(path) as fh:
        return monomials_from_text(fh.read())


def images_to_text(monomials, width: int, height: int) -> str:
    n = width * height
    blocks = [f"IMG v1 w={width} h={height}"]
    for m in monomials:
        if m.n != n:
            raise ValueError("image bit count does not match w*h")
        rows = []
        for r in range(height):
            rows.append("".join("1" if (m.mask >> (r * width + c)) & 1 else "0"
                                for c in range(width)))
        blocks.append("\n".join(rows))
    return "\n\n".join(blocks) + "\n"


def write_images(monomials, width: int, height: int, path):
    with open(path, "w") as fh:
        fh.write(images_to_text(monomials, width, height))


def images_from_text(text: str) -> tuple[list[Monomial], int, int]:
    lines = [ln for ln in text.splitlines() if not ln.lstrip().startswith("#")]
    idx = 0
    while idx < len(lines) and not lines[idx].strip():
        idx += 1
    header = lines[idx].split()
    if header[:2] != ["IMG", "v1"]:
        raise ValueError("not an IMG v1 file")
    fields = dict(kv.split("=") for kv in header[2:])
    w, h = int(fields["w"]), int(fields["h"])
    n = w * h
    out: list[Monomial] = []
    block: list[str] = []

    def flush():
        if not block:
            return
        if len(block) != h:
            raise ValueError(f"image block has {len(block)} rows, expected {h}")
        mask = 0
        for r, row in enumerate(block):
            if len(row) != w:
                raise ValueError(f"image row has {len(row)} columns, expected {w}")
            for c, ch in enumerate(row):
                if ch == "1":
                    mask |= 1 << (r * w + c)
                elif ch != "0":
                    raise ValueError(f"bad pixel {ch!r}")
        out.append(Monomial(mask, n))
        block.clear()

    for ln in lines[idx + 1:]:
        if ln.strip():
            block.append(ln.strip())
        else:
            flush()
    flush()
    return out, w, h


def read_images(path) -> tuple[list[Monomial], int, int]:
    with open(path) as fh:
        return images_from_text(fh.read())
