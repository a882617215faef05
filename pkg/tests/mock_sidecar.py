"""Scriptable stdio sidecar implementing the embedding wire protocol.

Behaviors for exercising the client:
  --dim N         advertised dimension (default 8)
  --shuffle       answer embed requests in pairs, reversed (out-of-order)
  --crash-after N exit abruptly before answering request N+1
  --hang          never answer embed requests
  --noisy         write a non-protocol line to stdout now and then
"""

import argparse
import base64
import hashlib
import json
import sys


def embedding_for(payload: bytes, dim: int):
    out = []
    counter = 0
    while len(out) < dim:
        digest = hashlib.sha256(payload + counter.to_bytes(4, "big")).digest()
        out.extend(b / 255.0 for b in digest)
        counter += 1
    return out[:dim]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--dim", type=int, default=8)
    ap.add_argument("--shuffle", action="store_true")
    ap.add_argument("--crash-after", type=int, default=-1)
    ap.add_argument("--hang", action="store_true")
    ap.add_argument("--noisy", action="store_true")
    args = ap.parse_args()

    served = 0
    held = []

    def reply(msg):
        sys.stdout.write(json.dumps(msg) + "\n")
        sys.stdout.flush()

    for raw in sys.stdin:
        try:
            req = json.loads(raw)
        except json.JSONDecodeError:
            continue
        if req.get("op") == "hello":
            reply({"id": req.get("id"), "dim": args.dim, "model": "mock-sidecar"})
            continue
        if req.get("op") != "embed":
            reply({"id": req.get("id"), "error": f"unknown op {req.get('op')}"})
            continue
        if args.hang:
            continue
        if args.crash_after >= 0 and served >= args.crash_after:
            sys.exit(17)
        try:
            payload = base64.b64decode(req["png_b64"], validate=True)
        except Exception:
            reply({"id": req.get("id"), "error": "bad base64 payload"})
            continue
        served += 1
        msg = {"id": req["id"], "embedding": embedding_for(payload, args.dim)}
        if args.noisy:
            sys.stdout.write("this is not json\n")
            sys.stdout.flush()
        if args.shuffle:
            held.append(msg)
            if len(held) == 2:
                reply(held[1])
                reply(held[0])
                held = []
            continue
        reply(msg)
    for msg in held:
        reply(msg)


if __name__ == "__main__":
    main()
