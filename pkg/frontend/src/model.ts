/** Fixed committed-weight softmax classifier.
 *
 * The image is box-averaged onto an 8x8 RGB grid (192 numbers in [0, 1],
 * plus a bias), projected through a weight matrix generated by a seeded
 * xorshift-style PRNG committed below, and squashed with a stable softmax.
 * No randomness at inference time: identical bytes give identical probs.
 */

import { RgbImage } from "./ppm.js";

export const MODEL_ID = "grid8-softmax-v1";
export const CLASS_COUNT = 10;

const GRID = 8;
const FEATURES = GRID * GRID * 3 + 1;
const WEIGHT_SEED = 0x2c9277b5;

/** mulberry32: tiny deterministic PRNG, uniform in [0, 1). */
function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function buildWeights(): Float64Array {
  const rand = mulberry32(WEIGHT_SEED);
  const scale = 1 / Math.sqrt(FEATURES);
  const weights = new Float64Array(CLASS_COUNT * FEATURES);
  for (let i = 0; i < weights.length; i++) {
    weights[i] = (2 * rand() - 1) * scale;
  }
  return weights;
}

function features(img: RgbImage): Float64Array {
  const out = new Float64Array(FEATURES);
  const counts = new Float64Array(GRID * GRID);
  for (let y = 0; y < img.height; y++) {
    const gy = Math.min(GRID - 1, Math.floor((y * GRID) / img.height));
    for (let x = 0; x < img.width; x++) {
      const gx = Math.min(GRID - 1, Math.floor((x * GRID) / img.width));
      const cell = gy * GRID + gx;
      const base = (y * img.width + x) * 3;
      out[cell * 3] += img.pixels[base];
      out[cell * 3 + 1] += img.pixels[base + 1];
      out[cell * 3 + 2] += img.pixels[base + 2];
      counts[cell] += 1;
    }
  }
  for (let cell = 0; cell < GRID * GRID; cell++) {
    const n = counts[cell] || 1;
    out[cell * 3] /= n * 255;
    out[cell * 3 + 1] /= n * 255;
    out[cell * 3 + 2] /= n * 255;
  }
  out[FEATURES - 1] = 1;
  return out;
}

export class Model {
  private readonly weights: Float64Array;

  constructor() {
    this.weights = buildWeights();
  }

  /** Class probabilities: CLASS_COUNT entries in [0, 1] summing to 1. */
  infer(img: RgbImage): number[] {
    const f = features(img);
    const logits = new Float64Array(CLASS_COUNT);
    for (let c = 0; c < CLASS_COUNT; c++) {
      let acc = 0;
      const row = c * FEATURES;
      for (let i = 0; i < FEATURES; i++) {
        acc += this.weights[row + i] * f[i];
      }
      // Spread logits so probabilities differ visibly between images.
      logits[c] = acc * 24;
    }
    const peak = Math.max(...logits);
    const exps = Array.from(logits, (v) => Math.exp(v - peak));
    const total = exps.reduce((a, b) => a + b, 0);
    return exps.map((v) => v / total);
  }
}

/** Simulated startup cost so the not-yet-loaded service state is observable. */
export async function loadModel(): Promise<Model> {
  await new Promise((resolve) => setImmediate(resolve));
  return new Model();
}
