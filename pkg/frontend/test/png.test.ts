import { readFileSync } from 'node:fs';
import { join } from 'node:path';
import { describe, expect, it } from 'vitest';

import { decodePng } from '../src/png';

const FX = join(__dirname, 'fixtures');

function fixture(name: string): Buffer {
  return readFileSync(join(FX, name));
}

function truth(name: string): any {
  return JSON.parse(readFileSync(join(FX, name), 'utf-8'));
}

describe('decodePng', () => {
  it('decodes grayscale to replicated RGB', () => {
    const img = decodePng(fixture('gray.png'));
    const want = truth('gray.json');
    expect(img.width).toBe(want.width);
    expect(img.height).toBe(want.height);
    for (let y = 0; y < img.height; y++) {
      for (let x = 0; x < img.width; x++) {
        const v = want.gray[y][x];
        const at = (y * img.width + x) * 3;
        expect([img.pixels[at], img.pixels[at + 1], img.pixels[at + 2]]).toEqual([v, v, v]);
      }
    }
  });

  it('decodes RGB byte-exactly', () => {
    const img = decodePng(fixture('rgb.png'));
    const want = truth('rgb.json');
    for (let y = 0; y < img.height; y++) {
      for (let x = 0; x < img.width; x++) {
        const at = (y * img.width + x) * 3;
        expect(Array.from(img.pixels.subarray(at, at + 3))).toEqual(want.rgb[y][x]);
      }
    }
  });

  it('drops the alpha channel of RGBA input', () => {
    const img = decodePng(fixture('rgba.png'));
    const want = truth('rgba.json');
    const at = (3 * img.width + 5) * 3;
    expect(Array.from(img.pixels.subarray(at, at + 3))).toEqual(want.rgb[3][5]);
  });

  it('decodes palette images through PLTE', () => {
    const img = decodePng(fixture('palette.png'));
    const want = truth('palette.json');
    for (let y = 0; y < img.height; y++) {
      for (let x = 0; x < img.width; x++) {
        const at = (y * img.width + x) * 3;
        expect(Array.from(img.pixels.subarray(at, at + 3))).toEqual(want.rgb[y][x]);
      }
    }
  });

  it('rejects non-PNG payloads', () => {
    expect(() => decodePng(Buffer.from('definitely not a png'))).toThrow(/signature/);
  });

  it('rejects truncated pixel data', () => {
    const good = fixture('rgb.png');
    const bad = good.subarray(0, good.length - 30);
    expect(() => decodePng(bad)).toThrow();
  });
});
