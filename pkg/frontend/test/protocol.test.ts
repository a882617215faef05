import { spawn, ChildProcessWithoutNullStreams } from 'node:child_process';
import { readFileSync } from 'node:fs';
import { join } from 'node:path';
import * as readline from 'node:readline';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { SeededConvEncoder } from '../src/encoder';
import { handleLine } from '../src/protocol';

const FX = join(__dirname, 'fixtures');
const MAIN = join(__dirname, '..', 'dist', 'main.js');

function pngB64(name: string): string {
  return readFileSync(join(FX, name)).toString('base64');
}

function cosine(a: number[], b: number[]): number {
  let dot = 0;
  let na = 0;
  let nb = 0;
  for (let i = 0; i < a.length; i++) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (Math.sqrt(na) * Math.sqrt(nb));
}

describe('handleLine (in process)', () => {
  const encoder = new SeededConvEncoder(32);

  it('answers hello with dim and model', () => {
    const reply = handleLine('{"op":"hello","id":0}', encoder) as any;
    expect(reply.dim).toBe(32);
    expect(typeof reply.model).toBe('string');
  });

  it('serves embeddings of the advertised length', () => {
    const reply = handleLine(
      JSON.stringify({ id: 1, op: 'embed', png_b64: pngB64('diagram.png') }),
      encoder,
    ) as any;
    expect(reply.id).toBe(1);
    expect(reply.embedding).toHaveLength(32);
  });

  it('answers corrupt payloads with per-id errors', () => {
    const bad = handleLine('{"id":7,"op":"embed","png_b64":"!!!"}', encoder) as any;
    expect(bad.id).toBe(7);
    expect(typeof bad.error).toBe('string');
    // session still healthy
    const ok = handleLine(
      JSON.stringify({ id: 8, op: 'embed', png_b64: pngB64('gray.png') }),
      encoder,
    ) as any;
    expect(ok.embedding).toHaveLength(32);
  });

  it('answers unknown ops and non-JSON without throwing', () => {
    expect((handleLine('{"id":2,"op":"nope"}', encoder) as any).error).toMatch(/unknown op/);
    expect((handleLine('garbage', encoder) as any).error).toMatch(/JSON/);
    expect(handleLine('   ', encoder)).toBeNull();
  });
});

describe('sidecar process conformance', () => {
  let proc: ChildProcessWithoutNullStreams;
  let replies: any[] = [];
  let stderrText = '';
  let rl: readline.Interface;

  function send(msg: Record<string, unknown>): void {
    proc.stdin.write(JSON.stringify(msg) + '\n');
  }

  function waitFor(predicate: () => boolean, timeoutMs = 15000): Promise<void> {
    return new Promise((resolve, reject) => {
      const started = Date.now();
      const tick = () => {
        if (predicate()) return resolve();
        if (Date.now() - started > timeoutMs) return reject(new Error('timeout waiting for replies'));
        setTimeout(tick, 20);
      };
      tick();
    });
  }

  beforeAll(() => {
    proc = spawn(process.execPath, [MAIN, '--dim', '64'], { stdio: 'pipe' });
    proc.stderr.on('data', (d) => {
      stderrText += String(d);
    });
    rl = readline.createInterface({ input: proc.stdout, terminal: false });
    rl.on('line', (line) => {
      replies.push(JSON.parse(line)); // throws on protocol impurity
    });
  });

  afterAll(() => {
    proc.kill();
  });

  it('handshake advertises a consistent dim', async () => {
    send({ id: 0, op: 'hello' });
    await waitFor(() => replies.length >= 1);
    expect(replies[0].dim).toBe(64);
    expect(replies[0].model).toContain('seeded-convnet');
  });

  it('identical images give cosine 1 within 1e-4', async () => {
    const b64 = pngB64('diagram.png');
    send({ id: 1, op: 'embed', png_b64: b64 });
    send({ id: 2, op: 'embed', png_b64: b64 });
    await waitFor(() => replies.length >= 3);
    const first = replies.find((r) => r.id === 1)!;
    const second = replies.find((r) => r.id === 2)!;
    expect(first.embedding).toHaveLength(64);
    expect(Math.abs(cosine(first.embedding, second.embedding) - 1)).toBeLessThan(1e-4);
  });

  it('malformed requests are isolated, session continues', async () => {
    send({ id: 3, op: 'embed', png_b64: 'not-base64-but-harmless' });
    send({ id: 4, op: 'embed', png_b64: pngB64('gray.png') });
    await waitFor(() => replies.length >= 5);
    const bad = replies.find((r) => r.id === 3)!;
    const good = replies.find((r) => r.id === 4)!;
    expect(typeof bad.error).toBe('string');
    expect(good.embedding).toHaveLength(64);
  });

  it('stdout carried protocol JSON only; logs went to stderr', () => {
    // every stdout line parsed as JSON in the reader above, or the suite
    // would already have failed; the readiness banner must be on stderr
    expect(replies.length).toBeGreaterThanOrEqual(5);
    expect(stderrText).toContain('sidecar ready');
  });
});
