/**
 * Deterministic convolutional image encoder.
 *
 * A small untrained ConvNet with weights drawn from a fixed-seed PRNG:
 * 224x224 RGB input, three strided conv+ReLU layers, global and 2x2
 * average pooling, and a dense projection to the output dimension.
 * Identical bytes in, identical floats out, on every platform.
 *
 * This is NOT a pretrained vision model; scores are self-consistent but
 * not comparable to published encoder scores. The handshake advertises
 * the real identity so downstream manifests record provenance. Swap in a
 * real model by implementing the same `Encoder` interface.
 */

import { DecodedImage } from './png';

export interface Encoder {
  readonly dim: number;
  readonly modelName: string;
  embed(image: DecodedImage): number[];
}

const INPUT_SIZE = 224;

/** xorshift128 PRNG: fast, seedable, identical everywhere */
class Rng {
  private x: number;
  private y: number;
  private z: number;
  private w: number;

  constructor(seed: number) {
    this.x = seed >>> 0 || 0x9e3779b9;
    this.y = 0x243f6a88;
    this.z = 0xb7e15162;
    this.w = 0xdeadbeef;
    for (let i = 0; i < 16; i++) this.next();
  }

  next(): number {
    const t = this.x ^ ((this.x << 11) >>> 0);
    this.x = this.y;
    this.y = this.z;
    this.z = this.w;
    this.w = (this.w ^ (this.w >>> 19) ^ (t ^ (t >>> 8))) >>> 0;
    return this.w / 0x100000000;
  }

  /** roughly normal via sum of uniforms, scaled */
  gauss(scale: number): number {
    let s = 0;
    for (let i = 0; i < 6; i++) s += this.next();
    return (s - 3) * scale;
  }
}

interface ConvLayer {
  inCh: number;
  outCh: number;
  kernel: number;
  stride: number;
  weights: Float64Array; // [outCh][inCh][k][k]
  bias: Float64Array;
}

function makeConv(rng: Rng, inCh: number, outCh: number, kernel: number, stride: number): ConvLayer {
  const fanIn = inCh * kernel * kernel;
  const scale = Math.sqrt(2 / fanIn);
  const weights = new Float64Array(outCh * inCh * kernel * kernel);
  for (let i = 0; i < weights.length; i++) weights[i] = rng.gauss(scale);
  const bias = new Float64Array(outCh);
  for (let i = 0; i < outCh; i++) bias[i] = rng.gauss(0.01);
  return { inCh, outCh, kernel, stride, weights, bias };
}

function convForward(
  input: Float64Array,
  w: number,
  h: number,
  layer: ConvLayer,
): { data: Float64Array; w: number; h: number } {
  const { inCh, outCh, kernel, stride } = layer;
  const ow = Math.floor((w - kernel) / stride) + 1;
  const oh = Math.floor((h - kernel) / stride) + 1;
  const out = new Float64Array(ow * oh * outCh);
  for (let oy = 0; oy < oh; oy++) {
    for (let ox = 0; ox < ow; ox++) {
      const baseY = oy * stride;
      const baseX = ox * stride;
      for (let oc = 0; oc < outCh; oc++) {
        let acc = layer.bias[oc];
        const wBase = oc * inCh * kernel * kernel;
        for (let ic = 0; ic < inCh; ic++) {
          for (let ky = 0; ky < kernel; ky++) {
            const rowIn = ((baseY + ky) * w + baseX) * inCh + ic;
            const rowW = wBase + (ic * kernel + ky) * kernel;
            for (let kx = 0; kx < kernel; kx++) {
              acc += input[rowIn + kx * inCh] * layer.weights[rowW + kx];
            }
          }
        }
        out[(oy * ow + ox) * outCh + oc] = acc > 0 ? acc : 0; // ReLU
      }
    }
  }
  return { data: out, w: ow, h: oh };
}

function resizeBilinear(image: DecodedImage, size: number): Float64Array {
  const { width, height, pixels } = image;
  const out = new Float64Array(size * size * 3);
  const sx = width / size;
  const sy = height / size;
  for (let y = 0; y < size; y++) {
    const fy = Math.min(height - 1, (y + 0.5) * sy - 0.5);
    const y0 = Math.max(0, Math.floor(fy));
    const y1 = Math.min(height - 1, y0 + 1);
    const wy = fy - y0;
    for (let x = 0; x < size; x++) {
      const fx = Math.min(width - 1, (x + 0.5) * sx - 0.5);
      const x0 = Math.max(0, Math.floor(fx));
      const x1 = Math.min(width - 1, x0 + 1);
      const wx = fx - x0;
      for (let c = 0; c < 3; c++) {
        const p00 = pixels[(y0 * width + x0) * 3 + c];
        const p01 = pixels[(y0 * width + x1) * 3 + c];
        const p10 = pixels[(y1 * width + x0) * 3 + c];
        const p11 = pixels[(y1 * width + x1) * 3 + c];
        const top = p00 + (p01 - p00) * wx;
        const bottom = p10 + (p11 - p10) * wx;
        // scale to [-1, 1]
        out[(y * size + x) * 3 + c] = (top + (bottom - top) * wy) / 127.5 - 1;
      }
    }
  }
  return out;
}

function averagePoolGrid(
  data: Float64Array,
  w: number,
  h: number,
  ch: number,
  grid: number,
): Float64Array {
  const out = new Float64Array(grid * grid * ch);
  const counts = new Float64Array(grid * grid);
  for (let y = 0; y < h; y++) {
    const gy = Math.min(grid - 1, Math.floor((y * grid) / h));
    for (let x = 0; x < w; x++) {
      const gx = Math.min(grid - 1, Math.floor((x * grid) / w));
      counts[gy * grid + gx] += 1;
      for (let c = 0; c < ch; c++) {
        out[(gy * grid + gx) * ch + c] += data[(y * w + x) * ch + c];
      }
    }
  }
  for (let cell = 0; cell < grid * grid; cell++) {
    const n = counts[cell] || 1;
    for (let c = 0; c < ch; c++) out[cell * ch + c] /= n;
  }
  return out;
}

export class SeededConvEncoder implements Encoder {
  readonly dim: number;
  readonly modelName: string;
  private layers: ConvLayer[];
  private projection: Float64Array;
  private featureDim: number;

  constructor(dim = 256, seed = 0x7f4a7c15) {
    this.dim = dim;
    this.modelName = `seeded-convnet-v1/d${dim}`;
    const rng = new Rng(seed);
    this.layers = [
      makeConv(rng, 3, 8, 7, 4),
      makeConv(rng, 8, 16, 5, 3),
      makeConv(rng, 16, 32, 3, 2),
    ];
    // features: global average (32) + 2x2 grid average (128) of the last layer
    this.featureDim = 32 + 2 * 2 * 32;
    this.projection = new Float64Array(this.featureDim * dim);
    const scale = Math.sqrt(1 / this.featureDim);
    for (let i = 0; i < this.projection.length; i++) this.projection[i] = rng.gauss(scale);
  }

  embed(image: DecodedImage): number[] {
    let data = resizeBilinear(image, INPUT_SIZE);
    let w = INPUT_SIZE;
    let h = INPUT_SIZE;
    let ch = 3;
    for (const layer of this.layers) {
      const next = convForward(data, w, h, layer);
      data = next.data;
      w = next.w;
      h = next.h;
      ch = layer.outCh;
    }
    const features = new Float64Array(this.featureDim);
    const globalPool = averagePoolGrid(data, w, h, ch, 1);
    features.set(globalPool, 0);
    features.set(averagePoolGrid(data, w, h, ch, 2), ch);

    const out = new Array<number>(this.dim).fill(0);
    for (let f = 0; f < this.featureDim; f++) {
      const v = features[f];
      if (v === 0) continue;
      const base = f * this.dim;
      for (let d = 0; d < this.dim; d++) {
        out[d] += v * this.projection[base + d];
      }
    }
    return out;
  }
}
