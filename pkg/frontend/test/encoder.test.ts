import { readFileSync } from 'node:fs';
import { join } from 'node:path';
import { describe, expect, it } from 'vitest';

import { SeededConvEncoder } from '../src/encoder';
import { decodePng } from '../src/png';

const FX = join(__dirname, 'fixtures');

function image(name: string) {
  return decodePng(readFileSync(join(FX, name)));
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

describe('SeededConvEncoder', () => {
  const encoder = new SeededConvEncoder();

  it('produces the advertised dimension with finite values', () => {
    const vec = encoder.embed(image('diagram.png'));
    expect(vec).toHaveLength(encoder.dim);
    expect(vec.every(Number.isFinite)).toBe(true);
    expect(vec.some((v) => v !== 0)).toBe(true);
  });

  it('is deterministic for identical input', () => {
    const a = encoder.embed(image('diagram.png'));
    const b = encoder.embed(image('diagram.png'));
    expect(a).toEqual(b);
    expect(cosine(a, b)).toBeCloseTo(1.0, 10);
  });

  it('same seed means same weights across instances', () => {
    const other = new SeededConvEncoder();
    expect(other.embed(image('noise.png'))).toEqual(encoder.embed(image('noise.png')));
  });

  it('different seeds give different encoders', () => {
    const other = new SeededConvEncoder(256, 12345);
    const a = encoder.embed(image('diagram.png'));
    const b = other.embed(image('diagram.png'));
    expect(cosine(a, b)).toBeLessThan(0.999);
  });

  it('one-pixel translation stays above the regression bound', () => {
    // empirical regression bound for this encoder, not a general claim
    const a = encoder.embed(image('diagram.png'));
    const b = encoder.embed(image('diagram_shift1.png'));
    expect(cosine(a, b)).toBeGreaterThan(0.99);
  });

  it('noise scores below the identical-pair score against a diagram', () => {
    const diagram = encoder.embed(image('diagram.png'));
    const noise = encoder.embed(image('noise.png'));
    expect(cosine(diagram, noise)).toBeLessThan(cosine(diagram, diagram) - 0.01);
  });

  it('honors a custom dimension', () => {
    const wide = new SeededConvEncoder(512);
    expect(wide.embed(image('gray.png'))).toHaveLength(512);
    expect(wide.modelName).toContain('512');
  });
});
