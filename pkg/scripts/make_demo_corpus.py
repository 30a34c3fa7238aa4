#!/usr/bin/env python3
"""Generate a synthetic 16 kHz training corpus plus manifest for the demo.

Writes N pseudo-utterance WAVs and a train manifest (one path per line)
into the output directory. Everything is deterministic per seed offset.
"""

from __future__ import annotations

import argparse
from pathlib import Path

from melvq.signal_io import write_wav
from melvq.signals import speech_like


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("outdir", type=Path)
    parser.add_argument("--count", type=int, default=20)
    parser.add_argument("--duration", type=float, default=1.5)
    parser.add_argument("--seed-offset", type=int, default=100,
                        help="first RNG seed; seeds are offset..offset+count-1")
    args = parser.parse_args()

    args.outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(args.count):
        path = args.outdir / f"utt_{args.seed_offset + i:04d}.wav"
        write_wav(path, speech_like(args.duration, seed=args.seed_offset + i))
        paths.append(str(path))
    manifest = args.outdir / "train_manifest.txt"
    manifest.write_text("\n".join(paths) + "\n")
    print(f"wrote {args.count} utterances and {manifest}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
