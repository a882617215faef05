/**
 * Embedding sidecar entry point.
 *
 *   node dist/main.js                      # stdio transport
 *   node dist/main.js --tcp 127.0.0.1:9077 # TCP transport
 *   node dist/main.js --dim 512 --seed 99  # encoder knobs
 *
 * Env fallbacks: SIDECAR_DIM, SIDECAR_SEED, SIDECAR_TCP.
 */

import { SeededConvEncoder } from './encoder';
import { serveStdio, serveTcp } from './server';

function argValue(argv: string[], name: string): string | undefined {
  const at = argv.indexOf(name);
  return at >= 0 && at + 1 < argv.length ? argv[at + 1] : undefined;
}

function main(): void {
  const argv = process.argv.slice(2);
  const dim = Number(argValue(argv, '--dim') ?? process.env.SIDECAR_DIM ?? 256);
  const seedRaw = argValue(argv, '--seed') ?? process.env.SIDECAR_SEED;
  const tcp = argValue(argv, '--tcp') ?? process.env.SIDECAR_TCP;

  if (!Number.isInteger(dim) || dim <= 0) {
    console.error(`invalid --dim: ${dim}`);
    process.exit(2);
  }
  const encoder = seedRaw === undefined
    ? new SeededConvEncoder(dim)
    : new SeededConvEncoder(dim, Number(seedRaw) >>> 0);

  if (tcp) {
    const sep = tcp.lastIndexOf(':');
    const host = sep > 0 ? tcp.slice(0, sep) : '127.0.0.1';
    const port = Number(tcp.slice(sep + 1));
    if (!Number.isInteger(port) || port <= 0) {
      console.error(`invalid --tcp address: ${tcp}`);
      process.exit(2);
    }
    serveTcp(encoder, host, port);
  } else {
    serveStdio(encoder);
  }
}

main();
