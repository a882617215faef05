"""Fallback PDF-to-PNG converter for minitex output.

Extracts the single embedded FlateDecode RGB image from a minitex PDF and
writes it as a PNG, scaling to the requested resolution when it differs
from the compile-time one.  Stdlib only; refuses PDFs it does not
recognize rather than guessing.

Invoked like a converter binary::

    python -m tikzforge.render.minipdf in.pdf out.png -r 300
"""

import re
import struct
import sys
import zlib

_IMAGE_OBJ_RE = re.compile(
    rb"<<(?P<dict>[^>]*?/Subtype\s*/Image[^>]*?)>>\s*stream\r?\n", re.S
)
_MEDIABOX_RE = re.compile(
    rb"/MediaBox\s*\[\s*([\d.+-]+)\s+([\d.+-]+)\s+([\d.+-]+)\s+([\d.+-]+)\s*\]"
)


def _png_chunk(tag, payload):
    data = tag + payload
    return struct.pack(">I", len(payload)) + data + struct.pack(">I", zlib.crc32(data) & 0xFFFFFFFF)


def write_png(path, width, height, rgb):
    raw = bytearray()
    stride = width * 3
    for y in range(height):
        raw.append(0)  # filter: none
        raw += rgb[y * stride : (y + 1) * stride]
    ihdr = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    with open(path, "wb") as fh:
        fh.write(b"\x89PNG\r\n\x1a\n")
        fh.write(_png_chunk(b"IHDR", ihdr))
        fh.write(_png_chunk(b"IDAT", zlib.compress(bytes(raw), 6)))
        fh.write(_png_chunk(b"IEND", b""))


def _scale_nearest(rgb, w, h, w2, h2):
    out = bytearray(w2 * h2 * 3)
    for y2 in range(h2):
        y = min(h - 1, y2 * h // h2)
        row = y * w * 3
        orow = y2 * w2 * 3
        for x2 in range(w2):
            x = min(w - 1, x2 * w // w2)
            out[orow + x2 * 3 : orow + x2 * 3 + 3] = rgb[row + x * 3 : row + x * 3 + 3]
    return out


def convert(pdf_path, png_path, dpi=300):
    with open(pdf_path, "rb") as fh:
        data = fh.read()
    m = _IMAGE_OBJ_RE.search(data)
    if not m:
        raise ValueError("no embedded image object found (not a minitex PDF?)")
    d = m.group("dict")
    width = int(re.search(rb"/Width\s+(\d+)", d).group(1))
    height = int(re.search(rb"/Height\s+(\d+)", d).group(1))
    if b"/FlateDecode" not in d or b"/DeviceRGB" not in d:
        raise ValueError("unsupported image encoding")
    length = int(re.search(rb"/Length\s+(\d+)", d).group(1))
    stream_at = m.end()
    rgb = zlib.decompress(data[stream_at : stream_at + length])
    if len(rgb) != width * height * 3:
        raise ValueError("image payload size mismatch")

    mb = _MEDIABOX_RE.search(data)
    if mb:
        w_pt = float(mb.group(3)) - float(mb.group(1))
        h_pt = float(mb.group(4)) - float(mb.group(2))
        w_out = max(1, round(w_pt / 72.0 * dpi))
        h_out = max(1, round(h_pt / 72.0 * dpi))
    else:
        w_out, h_out = width, height
    if (w_out, h_out) != (width, height):
        rgb = _scale_nearest(rgb, width, height, w_out, h_out)
        width, height = w_out, h_out
    write_png(png_path, width, height, rgb)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    dpi = 300
    if "-r" in argv:
        k = argv.index("-r")
        dpi = int(float(argv[k + 1]))
        del argv[k : k + 2]
    files = [a for a in argv if not a.startswith("-")]
    if len(files) != 2:
        sys.stderr.write("usage: minipdf in.pdf out.png [-r dpi]\n")
        return 2
    try:
        convert(files[0], files[1], dpi)
    except Exception as exc:
        sys.stderr.write(f"minipdf: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
